# Present so pytest adds the repo root to sys.path, making the top-level
# `services` and `models` packages importable from tests/.
