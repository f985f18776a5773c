"""Monophonic piano transcription."""
