import os

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA_DIR = os.path.join(REPO_ROOT, "data")
RUNS_DIR = os.path.join(REPO_ROOT, "runs")
LOGS_DIR = os.path.join(REPO_ROOT, "logs")

H3PLUS_HAMILTONIAN = os.path.join(DATA_DIR, "h3plus_shifted.txt")


def require_dirs(assert_only: bool = True):
    """Check (or create) the directories the command line writes into.

    The bundled data directory must always exist; run and log directories are
    created on demand when assert_only is False.
    """
    if not os.path.isdir(DATA_DIR):
        raise OSError(f"Expected data directory not found: {DATA_DIR}")
    if assert_only:
        for path in (RUNS_DIR, LOGS_DIR):
            if not os.path.isdir(path):
                raise OSError(f"Expected output directory not found: {path}")
    else:
        os.makedirs(RUNS_DIR, exist_ok=True)
        os.makedirs(LOGS_DIR, exist_ok=True)
