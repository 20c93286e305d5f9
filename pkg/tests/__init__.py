# tests package initialization file 