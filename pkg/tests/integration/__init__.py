"""Integration tests for pymmwave."""