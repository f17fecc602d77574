"""Test package for pymmwave."""