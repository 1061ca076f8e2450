"""Leveled console logging.

Logs go to stderr so stdout stays free for machine-readable results.
"""

import sys
from datetime import datetime

try:
    from rich.console import Console
    from rich.table import Table
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False


# Color codes for terminal output
class Colors:
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKCYAN = '\033[96m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'

    @staticmethod
    def disable():
        """Disable colors for piped output."""
        for attr in dir(Colors):
            if not attr.startswith('_') and attr != 'disable':
                setattr(Colors, attr, '')


LEVEL_STYLES = {
    "INFO": ("blue", "OKBLUE"),
    "STAGE": ("cyan", "OKCYAN"),
    "SUCCESS": ("green", "OKGREEN"),
    "WARNING": ("yellow", "WARNING"),
    "ERROR": ("bold red", "FAIL"),
}

ALWAYS_SHOWN = ("ERROR", "WARNING", "SUCCESS")

_state = {"verbose": False}
_console = Console(stderr=True, highlight=False, soft_wrap=True) if RICH_AVAILABLE else None


def set_verbose(verbose: bool) -> None:
    _state["verbose"] = bool(verbose)


def is_verbose() -> bool:
    return _state["verbose"]


def log(message: str, level: str = "INFO") -> None:
    """Log a message with timestamp and level."""
    if not (_state["verbose"] or level in ALWAYS_SHOWN):
        return
    timestamp = datetime.now().strftime("%H:%M:%S")
    style, color_attr = LEVEL_STYLES.get(level, ("", ""))
    if _console is not None:
        _console.print(f"[{timestamp}] [{level}] {message}", style=style or None, markup=False)
    else:
        color = getattr(Colors, color_attr, "") if color_attr else ""
        print(f"{color}[{timestamp}] [{level}] {message}{Colors.ENDC}", file=sys.stderr)


def print_table(title: str, columns, rows) -> None:
    """Render rows as a table on stderr (rich when available)."""
    rows = [[str(cell) for cell in row] for row in rows]
    if _console is not None:
        table = Table(title=title)
        for column in columns:
            table.add_column(str(column))
        for row in rows:
            table.add_row(*row)
        _console.print(table)
        return
    widths = [max([len(str(c))] + [len(r[i]) for r in rows]) for i, c in enumerate(columns)]
    print(f"{Colors.BOLD}{title}{Colors.ENDC}", file=sys.stderr)
    print("  ".join(str(c).ljust(w) for c, w in zip(columns, widths)), file=sys.stderr)
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)), file=sys.stderr)
