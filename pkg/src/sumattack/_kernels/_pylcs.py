"""Pure-Python fallback for the LCS kernel; same contract as the compiled one."""


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two int sequences."""
    a = list(a)
    b = list(b)
    if not a or not b:
        return 0
    if len(b) > len(a):
        a, b = b, a
    m = len(b)
    prev = [0] * (m + 1)
    for ai in a:
        curr = [0]
        append = curr.append
        for j in range(m):
            if ai == b[j]:
                append(prev[j] + 1)
            else:
                left = curr[j]
                up = prev[j + 1]
                append(left if left > up else up)
        prev = curr
    return prev[m]
