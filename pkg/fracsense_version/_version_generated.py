# Copyright Fracsense Authors 2026
build_number = 1
