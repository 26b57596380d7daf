from pathlib import Path
from typing import Union
import signal

from .errors import SuiteTimeout


def ensure_dir(path: Union[Path, str]) -> Path:
    """
    Create an output directory (and its parents) if missing. Unlike a forced mkdir, existing
    results in the directory are left alone.
    """
    path = Path(path).expanduser().absolute()
    path.mkdir(parents=True, exist_ok=True)
    return path


class time_limit:
    """
    Wall-clock guard for verification suites. Uses SIGALRM, so it only arms itself on the main
    thread of platforms that provide the signal; elsewhere it is a no-op.
    """

    def __init__(self, seconds=60, name="suite"):
        self.seconds = int(seconds)
        self.name = name
        self._armed = False

    def handle_timeout(self, signum, frame):
        raise SuiteTimeout(f"{self.name} exceeded {self.seconds}s")

    def __enter__(self):
        if self.seconds > 0 and hasattr(signal, "SIGALRM"):
            try:
                signal.signal(signal.SIGALRM, self.handle_timeout)
            except ValueError:
                # not on the main thread
                return self

            signal.alarm(self.seconds)
            self._armed = True
        return self

    def __exit__(self, type_, value, traceback):
        if self._armed:
            signal.alarm(0)
            self._armed = False
