"""
Global settings.
"""
import pathlib
from fractions import Fraction

# Data
PROJECT_ROOT = pathlib.Path(__file__).resolve().parents[2]
DATA_ROOT = PROJECT_ROOT / 'data'
CORPUS_ROOT = DATA_ROOT / 'corpus'
OUTPUT_ROOT = PROJECT_ROOT / 'output'
DATA_EXPERIMENTS = OUTPUT_ROOT / 'experiments'

# Experiment tracking
MLFLOW_TRACKING_URI = (OUTPUT_ROOT / 'mlruns').as_uri()
EXPERIMENT_NAME = 'monoscribe'

# Audio
MIN_SAMPLE_RATE = 8000
DEFAULT_SAMPLE_RATE = 44100

# Onset detection
WINDOW_LENGTH_S = 0.046
HOP_LENGTH_S = 0.010
GAMMA = 100.0
AMP_THRESHOLD = 0.1
MIN_SEPARATION_S = 0.1

# Tempo estimation
TEMPO_RANGE_BPM = (40.0, 240.0)
TEMPO_PRIOR_BPM = 120.0
# width of the log-Gaussian tempo prior, in octaves
TEMPO_PRIOR_SIGMA = 1.0
# halving / doubling within this fraction of the winner is reported as ambiguous
TEMPO_AMBIGUITY_RATIO = 0.1
# every picked onset becomes a Hann pulse this many frames wide
PULSE_WIDTH_FRAMES = 7

# Beat detection
GRID = Fraction(1, 4)
ALLOWED_GRIDS = (Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(1))
# -60 dB below the peak energy of the last note
END_THRESHOLD = 1.0e-6

# Pitch detection
YIN_WINDOW_LENGTH_S = 0.068
YIN_HOP_LENGTH_S = 0.010
YIN_THRESHOLD = 0.1
# A0 - C8
F_MIN = 27.5
F_MAX = 4186.0
# fall back to the global minimum only below this value
YIN_UNVOICED_CEILING = 0.5

# Score
TIME_SIGNATURE = (4, 4)
ALLOWED_DENOMINATORS = (1, 2, 4, 8, 16)
PIANO_MIDI_RANGE = (21, 108)
LILYPOND_VERSION = '2.24.0'

# Synthesis
N_HARMONICS = 6
HARMONIC_ROLLOFF_DB = 6.0
ATTACK_S = 0.010
DECAY_RATE_PER_S = 3.0
SUSTAIN_LEVEL = 0.0
RELEASE_S = 0.0
TAIL_S = 0.5
TEMPO_LIMITS_BPM = (20.0, 300.0)

# Evaluation
GAP_COST = 0.75
MISMATCH_COST = 1.0
ROBUSTNESS_TEMPOS = (80, 100, 120)
ROBUSTNESS_MELODIES = ('ode_to_joy', 'twinkle_twinkle')
