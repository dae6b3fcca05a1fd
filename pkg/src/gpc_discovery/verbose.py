"""Verbose decorator and numerical event counters."""

from functools import wraps
from threading import Lock


def set_verbose_level(level: int) -> None:
    """Instanciate the Verbose singleton to a given value.

    Parameters
    ----------
    level : int
        Verbose level.
    """
    verbose = Verbose()
    verbose.level = level


class Verbose:
    """Verbose Singleton class."""

    _instance = None
    _level: int = 0
    max_allowed: int = 2
    min_allowed: int = 0

    def __new__(cls) -> "Verbose":
        """Instanciate new verbose singleton.

        Create an instance if there is no instance existing.
        Otherwise, return the existing one.

        Returns
        -------
        Verbose
            Verbose singleton
        """
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    @property
    def level(self) -> int:
        """Verbose level."""
        return self._level

    @level.setter
    def level(self, level) -> None:
        assert isinstance(level, int), "self.level must be an instance of int"
        self._level = level

    def display(self, trigger_threshold: int, content: str) -> None:
        """Print content if the verbose level is above the threshold.

        Parameters
        ----------
        trigger_threshold : int
            Level to use as trigger for verbose display.
        content : str
            Message to display.
        """
        threshold_or_max = min(trigger_threshold, self.max_allowed)
        level = max(self.min_allowed, threshold_or_max)
        if self.level > level:
            offset = "".join(["\t"] * level)
            print(f"{offset}{content}")


def with_verbose(trigger_threshold: int, message: str):
    """Display verbose on the function call.

    One must keep in mind that the message is displayed only if the verbose
    level is STRICTLY greater than the trigger_threshold.

    In order to use a placeholder to insert values in the message use square brackets
    ('[' and ']').
    However, keep in mind that for the placeholder to work, one must
    the name of the parameter in the function call.

    For example, with:

    >>> @with_verbose(trigger_threshold=0, message="Absorbing [n_new] points")
    >>> def absorb(n_new: int) -> None:
    >>>     ...

    `absorb(n_new=3)` displays 'Absorbing 3 points' while `absorb(3)`
    displays 'Absorbing [n_new] points'.

    Parameters
    ----------
    trigger_threshold : int
        Level to use as trigger for verbose display.
        Example: if trigger_level = 1 -> message is displayed if
        the global verbose level is striclty greater than 1.
    message : str
        Message to display.
    """

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            if not isinstance(trigger_threshold, int):
                error_msg = "Trigger threshold must be an integer"
                raise TypeError(error_msg)
            content = message
            for key, value in kwargs.items():
                content = content.replace("[" + key + "]", str(value))
            Verbose().display(trigger_threshold, content)
            return func(*args, **kwargs)

        return wrapper

    return decorator


class NumericsMonitor:
    """Singleton counting numerical events which were silently repaired.

    Counters are updated under a lock as the sampler worker threads share them.
    """

    _instance = None

    def __new__(cls) -> "NumericsMonitor":
        """Instanciate new monitor singleton.

        Returns
        -------
        NumericsMonitor
            Monitor singleton.
        """
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._lock = Lock()
            cls._instance.reset()
        return cls._instance

    def reset(self) -> None:
        """Set all counters back to zero."""
        with self._lock:
            self.jitter_events = 0
            self.clamped_variances = 0
            self.divergences = 0

    def record_jitter(self, jitter: float, context: str) -> None:
        """Count a Cholesky factorization which needed a jitter.

        Parameters
        ----------
        jitter : float
            Jitter added to the diagonal.
        context : str
            Description of the factorized matrix.
        """
        with self._lock:
            self.jitter_events += 1
        Verbose().display(2, f"Cholesky of {context} needed jitter {jitter:.3e}.")

    def record_clamp(self, variance: float) -> None:
        """Count a slightly negative conditional variance clamped to zero.

        Parameters
        ----------
        variance : float
            Negative variance which was clamped.
        """
        with self._lock:
            self.clamped_variances += 1
        Verbose().display(2, f"Conditional variance {variance:.3e} clamped to 0.")

    def record_divergence(self) -> None:
        """Count a HMC trajectory with non-finite energy."""
        with self._lock:
            self.divergences += 1

    def as_dict(self) -> dict[str, int]:
        """Counters as a dictionnary.

        Returns
        -------
        dict[str, int]
            Counter name -> value.
        """
        with self._lock:
            return {
                "jitter_events": self.jitter_events,
                "clamped_variances": self.clamped_variances,
                "divergences": self.divergences,
            }
