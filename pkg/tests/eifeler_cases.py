"""Hand-derived n-deletion cases shared by the unit and acceptance suites.

Each entry is (input sentence, expected output, config). Expected strings were
derived by hand-applying the configured rule: strip a final n/nn unless the
next word starts with a vowel or n/d/t/z/h, keep it before a pause, never
empty a word, and leave excepted words alone.
"""

from lowmt.pseudo import EifelerRuleConfig

DEFAULT = EifelerRuleConfig()
WITH_EXCEPTION = EifelerRuleConfig(exceptions=frozenset({"wann"}))
NO_PAUSE_RETENTION = EifelerRuleConfig(retain_at_pause=False)

EIFELER_SUITE = [
    # deletion before a non-retained consonant
    ("den Ball", "de Ball", DEFAULT),
    ("wann mir kommen, gi mir", "wa mir komme, gi mir", DEFAULT),
    ("kann säin", "ka säin", DEFAULT),
    ("een klengen Auto", "ee klengen Auto", DEFAULT),
    ("si wunnen well", "si wunne well", DEFAULT),
    ("Si kommen. Mir ginn.", "Si komme. Mir ginn.", DEFAULT),
    # vowel retention
    ("den Apel", "den Apel", DEFAULT),
    ("hunn ech", "hunn ech", DEFAULT),
    ("den Éisleck", "den Éisleck", DEFAULT),
    # n/d/t/z/h retention
    ("wann dann zwee hin nee", "wann dann zwee hin nee", DEFAULT),
    ("en Haus", "en Haus", DEFAULT),
    ("den Tuerm", "den Tuerm", DEFAULT),
    ("den Zuch", "den Zuch", DEFAULT),
    ("den Noper", "den Noper", DEFAULT),
    ("den Dag", "den Dag", DEFAULT),
    # pause retention (end of input, or only punctuation up to it)
    ("si hunn.", "si hunn.", DEFAULT),
    ("mir ginn", "mir ginn", DEFAULT),
    ("mir kommen ...", "mir kommen ...", DEFAULT),
    # nn suffix strips both characters; capitalized words fold for the checks
    ("d'Kanner hunn Spaass", "d'Kanner hu Spaass", DEFAULT),
    ("Wann mir fueren", "Wa mir fueren", DEFAULT),
    # deletion never empties a word
    ("nn Ball", "nn Ball", DEFAULT),
    # exception list wins; non-excepted words still change
    ("wann mir", "wann mir", WITH_EXCEPTION),
    ("dann mir", "da mir", WITH_EXCEPTION),
    # pause retention can be switched off
    ("si hunn.", "si hu.", NO_PAUSE_RETENTION),
]
