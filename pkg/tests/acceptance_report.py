"""Collects acceptance verdict lines for the end-of-run summary."""

lines: list[str] = []


def report(line: str) -> None:
    lines.append(line)
    print(line)
