"""Transcribe, evaluate, synthesize and debug from the command line."""
import sys

from monoscribe.cli import main

if __name__ == '__main__':
    sys.exit(main())
