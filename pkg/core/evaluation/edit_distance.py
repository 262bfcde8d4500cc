"""
Token edit distance and phone error rate.

Unit-cost Levenshtein alignment; the backtrace prefers a substitution (or
match) over a deletion over an insertion when several moves are optimal.
"""

from typing import Iterable, NamedTuple, Sequence, Tuple


class EditCounts(NamedTuple):
    substitutions: int
    deletions: int
    insertions: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def edit_distance(ref: Sequence[int], hyp: Sequence[int]) -> EditCounts:
    """(substitutions, deletions, insertions) of a minimal alignment of ``hyp`` to ``ref``."""
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][0] = i
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            dp[i][j] = min(dp[i - 1][j - 1] + cost, dp[i - 1][j] + 1, dp[i][j - 1] + 1)

    substitutions = deletions = insertions = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                substitutions += 1
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            deletions += 1
            i -= 1
        else:
            insertions += 1
            j -= 1
    return EditCounts(substitutions, deletions, insertions)


def per_corpus(pairs: Iterable[Tuple[Sequence[int], Sequence[int]]]) -> float:
    """
    Corpus error rate in percent: 100 * sum(S + D + I) / sum(|ref|).

    Raises:
        ValueError: If every reference is empty
    """
    errors = 0
    reference_tokens = 0
    for ref, hyp in pairs:
        errors += edit_distance(ref, hyp).total
        reference_tokens += len(ref)
    if reference_tokens == 0:
        raise ValueError("error rate undefined: all references are empty")
    return 100.0 * errors / reference_tokens
