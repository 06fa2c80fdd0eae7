"""Tests for the singscope project."""
