# tests/unit package initialization file 