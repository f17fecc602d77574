"""Unit tests for pymmwave."""