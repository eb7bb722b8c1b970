"""Registrable-domain (eTLD+1) lookup against a bundled public-suffix table."""

from __future__ import annotations

import ipaddress
from functools import lru_cache
from importlib import resources


class PublicSuffixTable:
    """Public-suffix rules in the publicsuffix.org format.

    One rule per line, ``//`` comments and blank lines ignored, ``*.`` for
    wildcards and ``!`` for exceptions. Rules are kept both in their Unicode
    form and IDNA-encoded so that hosts in either form resolve the same way.
    """

    def __init__(self, text: str):
        self.rules: set[str] = set()
        self.exceptions: set[str] = set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            rule = line.split()[0].lower()
            target = self.rules
            if rule.startswith("!"):
                target = self.exceptions
                rule = rule[1:]
            target.add(rule)
            encoded = _to_ascii(rule)
            if encoded and encoded != rule:
                target.add(encoded)

    @classmethod
    def bundled(cls) -> "PublicSuffixTable":
        return _bundled_table()

    def public_suffix(self, labels: list[str]) -> int:
        """Return how many trailing labels form the public suffix."""
        n = len(labels)
        for i in range(n):
            suffix = ".".join(labels[i:])
            if suffix in self.exceptions:
                return n - i - 1
            if suffix in self.rules:
                return n - i
            if i + 1 < n and "*." + ".".join(labels[i + 1:]) in self.rules:
                return n - i
        # implicit default rule "*"
        return 1

    def registrable_domain(self, host: str) -> str:
        host = _normalize_host(host)
        if _is_ip_literal(host):
            return host
        labels = host.split(".")
        if any(not label for label in labels):
            raise ValueError(f"invalid hostname: {host!r}")
        suffix_len = self.public_suffix(labels)
        if suffix_len >= len(labels):
            # the host is itself a public suffix; it is its own owner
            return host
        return ".".join(labels[-(suffix_len + 1):])


def _to_ascii(rule: str) -> str | None:
    if rule.isascii():
        return rule
    try:
        return ".".join(
            "*" if part == "*" else part.encode("idna").decode("ascii")
            for part in rule.split(".")
        )
    except UnicodeError:
        return None


def _normalize_host(host: str) -> str:
    if host is None:
        raise ValueError("empty host")
    host = host.strip().lower()
    if host.endswith("."):
        host = host[:-1]
    if not host:
        raise ValueError("empty host")
    return host


def _is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host.strip("[]"))
    except ValueError:
        return False
    return True


@lru_cache(maxsize=1)
def _bundled_table() -> PublicSuffixTable:
    text = resources.files("footprint").joinpath("data/public_suffix_list.dat").read_text("utf-8")
    return PublicSuffixTable(text)


@lru_cache(maxsize=65536)
def registrable_domain(host: str) -> str:
    """Return the public suffix plus one label for ``host``.

    IP literals are returned unchanged, unknown suffixes fall back to the last
    two labels, and a host that is itself a public suffix is returned as-is.
    Raises ``ValueError`` for an empty or syntactically broken host.
    """
    return _bundled_table().registrable_domain(host)
