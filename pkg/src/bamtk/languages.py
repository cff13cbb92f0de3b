"""Language tags accepted throughout the toolkit.

Exactly four codes are valid: bam, fr, en, es. Anything else is rejected at
parse time (ingest skips-and-counts, everything downstream raises).
"""

from __future__ import annotations

import enum


class UnknownLanguageError(ValueError):
    """A language code outside the supported set was used."""


class LanguageTag(enum.Enum):
    BAM = "bam"
    FR = "fr"
    EN = "en"
    ES = "es"

    def __str__(self) -> str:
        return self.value

    @property
    def order(self) -> int:
        """Canonical stream order: bam < fr < en < es."""
        return _ORDER[self]

    @classmethod
    def parse(cls, code: str) -> "LanguageTag":
        try:
            return _BY_CODE[code]
        except KeyError:
            raise UnknownLanguageError(
                f"unsupported language code {code!r} (expected one of bam, fr, en, es)"
            ) from None

    @classmethod
    def try_parse(cls, code: str) -> "LanguageTag | None":
        return _BY_CODE.get(code)


_BY_CODE = {tag.value: tag for tag in LanguageTag}
_ORDER = {LanguageTag.BAM: 0, LanguageTag.FR: 1, LanguageTag.EN: 2, LanguageTag.ES: 3}

#: All tags in canonical order.
ALL_LANGUAGES = tuple(sorted(LanguageTag, key=lambda t: t.order))
