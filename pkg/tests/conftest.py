import copy
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

WEATHER = {
    "type": "function",
    "function": {
        "name": "get_weather",
        "description": "Current weather for a city.",
        "parameters": {
            "type": "object",
            "properties": {
                "location": {"type": "string", "description": "City name."},
                "unit": {"type": "string", "enum": ["c", "f"]},
            },
            "required": ["location"],
        },
    },
}

DB_QUERY = {
    "type": "function",
    "function": {
        "name": "db_query",
        "description": "Query a table.",
        "parameters": {
            "type": "object",
            "properties": {
                "query": {
                    "type": "object",
                    "description": "What to select.",
                    "properties": {
                        "table": {"type": "string"},
                        "filters": {
                            "type": "array",
                            "items": {"type": "string"},
                            "minItems": 1,
                            "description": "Row conditions.",
                        },
                    },
                    "required": ["filters"],
                },
                "limit": {"type": "integer", "minimum": 1},
            },
            "required": ["query"],
        },
    },
}


@pytest.fixture
def weather_raw():
    return copy.deepcopy(WEATHER)


@pytest.fixture
def db_raw():
    return copy.deepcopy(DB_QUERY)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
