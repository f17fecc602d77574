"""Test fixtures for pymmwave tests."""