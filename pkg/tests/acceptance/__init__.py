# tests/acceptance package initialization file
