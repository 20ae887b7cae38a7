"""Quasinormal-mode field theory of an open 1-d scalar cavity."""
