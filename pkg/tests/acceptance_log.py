"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

RESULTS = {}


def record(number, title, ok, detail=""):
    line = f"CRITERION {number} {'PASS' if ok else 'FAIL'}: {title}" + (f" [{detail}]" if detail else "")
    RESULTS[number] = line
    print(line)
    return ok
