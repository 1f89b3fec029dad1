# Copyright Fracsense Authors 2026
