"""Flat `key = value` experiment configuration with strict parsing.

Sections are spelled with dots (e.g. `illposed.gamma = 0.02`).  Unknown
keys, duplicate keys and malformed lines are rejected with the offending
line number, preventing silent typos.
"""

__all__ = ["ConfigError", "ExperimentConfig"]


class ConfigError(Exception):
    """Malformed or invalid experiment configuration."""


class ExperimentConfig:
    def __init__(self, values, source="<config>"):
        self.values = dict(values)
        self.source = source

    @classmethod
    def parse(cls, text, allowed, source="<config>"):
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{source}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{source}:{lineno}: empty key or value")
            if key not in allowed:
                raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values, source)

    @classmethod
    def load(cls, path, allowed):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.parse(text, allowed, source=str(path))

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ConfigError(f"{self.source}: missing required key {key!r}")
        return self.values[key]

    def get_float(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{self.source}: key {key!r} is not a number "
                              f"({raw!r})") from None

    def get_int(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{self.source}: key {key!r} is not an integer "
                              f"({raw!r})") from None

    def get_bool(self, key, default=None):
        raw = self.values.get(key)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.source}: key {key!r} is not a boolean "
                          f"({raw!r})")

    def get_choice(self, key, choices, default=None):
        raw = self.values.get(key, default)
        if raw is None:
            return None
        if raw not in choices:
            raise ConfigError(f"{self.source}: key {key!r} must be one of "
                              f"{sorted(choices)}, got {raw!r}")
        return raw
