"""Terminal output for the homogenize commands: status lines, tables and the check tally."""

import sys
import time
from typing import List, Sequence

RESET = "\033[0m"
STYLES = {
    "bold": "\033[1m",
    "red": "\033[91m",
    "green": "\033[92m",
    "yellow": "\033[93m",
    "blue": "\033[94m",
    "cyan": "\033[96m",
}


def color_supported() -> bool:
    """ANSI codes are only written to an interactive terminal."""
    isatty = getattr(sys.stdout, "isatty", None)
    return bool(isatty and isatty())


def colorize(text: str, style: str, enabled: bool = True) -> str:
    """Wrap text in the ANSI code for a STYLES key, or return it unchanged."""
    if not (enabled and color_supported()):
        return text
    return f"{STYLES[style]}{text}{RESET}"


def _status(marker: str, style: str, message: str, color_enabled: bool) -> None:
    print(colorize(f"{marker} {message}", style, color_enabled))


def print_success(message: str, color_enabled: bool = True) -> None:
    _status("✅", "green", message, color_enabled)


def print_error(message: str, color_enabled: bool = True) -> None:
    _status("❌", "red", message, color_enabled)


def print_warning(message: str, color_enabled: bool = True) -> None:
    _status("⚠️ ", "yellow", message, color_enabled)


def print_info(message: str, color_enabled: bool = True) -> None:
    _status("ℹ️ ", "blue", message, color_enabled)


def print_header(message: str, color_enabled: bool = True) -> None:
    """Bold cyan title on a terminal; a ruled block otherwise."""
    if color_enabled and color_supported():
        print("\n" + colorize(STYLES["bold"] + message, "cyan"))
    else:
        rule = "=" * 60
        print(f"\n{rule}\n{message}\n{rule}")


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """
    Render rows as a fixed-width text table.

    Floats are shown in scientific notation, everything else with str().
    """

    def cell(value) -> str:
        if isinstance(value, float):
            return f"{value:.4e}"
        return str(value)

    body = [[cell(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in body:
        widths = [max(w, len(v)) for w, v in zip(widths, row)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in body)
    return "\n".join(lines)


class CheckStats:
    """Tally of invariant checks run by a command; decides the exit code."""

    def __init__(self):
        self.start_time = None
        self.end_time = None
        self.passed = 0
        self.failed = 0
        self.failures: List[dict] = []

    def start(self):
        """Start tracking."""
        self.start_time = time.time()
        self.passed = 0
        self.failed = 0
        self.failures = []

    def record(self, name: str, ok: bool, detail: str = "") -> bool:
        """Record one check; returns ok so calls can be chained."""
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append({"check": name, "detail": detail})
        return ok

    def end(self):
        """End tracking."""
        self.end_time = time.time()

    @property
    def total(self) -> int:
        return self.passed + self.failed

    @property
    def all_passed(self) -> bool:
        return self.failed == 0

    def get_elapsed_time(self) -> float:
        """Get elapsed time in seconds."""
        if not self.start_time:
            return 0
        end = self.end_time or time.time()
        return end - self.start_time

    def print_summary(self, color_enabled: bool = True):
        """Print the check summary."""
        print_header("📊 Check Summary", color_enabled)
        print(f"\n⏱️  Total time: {self.get_elapsed_time():.2f} seconds")
        print(f"📝 Checks run: {self.total}")

        if self.passed > 0:
            print_success(f"Passed: {self.passed}", color_enabled)

        if self.failed > 0:
            print_error(f"Failed: {self.failed}", color_enabled)
            for failure in self.failures:
                print(f"  • {failure['check']}: {failure['detail']}")
