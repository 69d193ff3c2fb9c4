"""Tests for toneval."""
