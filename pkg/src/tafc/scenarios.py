"""Bundled synthetic evaluation suites.

Three families with a rising difficulty gradient: ``i1`` (one tool),
``i2`` (three tools from one category, two-step tasks) and ``i3`` (five
tools across categories sharing parameter names, two- and three-step
tasks).  ``control`` replays ``i2`` with a model that ignores reasoning
fields entirely.
"""

from __future__ import annotations

import json
from typing import Any

from .harness import EvalScenario, Task


def _fn(name: str, description: str, properties: dict[str, Any], required: list[str]) -> dict[str, Any]:
    return {
        "type": "function",
        "function": {
            "name": name,
            "description": description,
            "parameters": {"type": "object", "properties": properties, "required": required},
        },
    }


FLIGHT_TOOLS = [
    _fn(
        "search_flights",
        "Search scheduled flights between two airports.",
        {
            "origin": {"type": "string", "description": "IATA code of the departure airport.", "pattern": "^[A-Z]{3}$"},
            "destination": {
                "type": "string",
                "description": "IATA code of the arrival airport; must differ from origin.",
                "pattern": "^[A-Z]{3}$",
            },
            "date": {"type": "string", "description": "Departure date.", "format": "date"},
            "passengers": {"type": "integer", "minimum": 1, "maximum": 9, "description": "Number of travellers."},
            "cabin": {"type": "string", "enum": ["economy", "premium", "business", "first"]},
            "filters": {
                "type": "object",
                "description": "Optional result filters; max_price applies per passengers count.",
                "properties": {
                    "max_price": {"type": "number", "minimum": 0},
                    "airlines": {"type": "array", "items": {"type": "string"}, "uniqueItems": True},
                    "nonstop": {"type": "boolean"},
                },
            },
        },
        ["origin", "destination", "date"],
    )
]

WEATHER_TOOLS = [
    _fn(
        "get_current_weather",
        "Current conditions for a location.",
        {
            "location": {"type": "string", "description": "City name, optionally with country."},
            "unit": {"type": "string", "enum": ["celsius", "fahrenheit"]},
        },
        ["location"],
    ),
    _fn(
        "get_forecast",
        "Daily forecast for a location.",
        {
            "location": {"type": "string", "description": "City name, optionally with country."},
            "days": {"type": "integer", "minimum": 1, "maximum": 14, "description": "Forecast horizon in days."},
            "unit": {"type": "string", "enum": ["celsius", "fahrenheit"]},
        },
        ["location", "days"],
    ),
    _fn(
        "get_air_quality",
        "Air quality readings for a location.",
        {
            "location": {"type": "string"},
            "pollutants": {
                "type": "array",
                "items": {"type": "string", "enum": ["pm25", "pm10", "o3", "no2"]},
                "minItems": 1,
                "uniqueItems": True,
                "description": "Pollutants to report for the location.",
            },
        },
        ["location", "pollutants"],
    ),
]

OFFICE_TOOLS = [
    _fn(
        "create_calendar_event",
        "Create an event in a user's calendar.",
        {
            "user_id": {"type": "string", "pattern": "^u[0-9]+$"},
            "title": {"type": "string", "minLength": 1, "maxLength": 80},
            "date": {"type": "string", "format": "date"},
            "duration_minutes": {"type": "integer", "minimum": 15, "maximum": 480, "multipleOf": 15},
        },
        ["user_id", "title", "date"],
    ),
    _fn(
        "send_email",
        "Send an email on behalf of a user.",
        {
            "user_id": {"type": "string", "pattern": "^u[0-9]+$"},
            "to": {"type": "string", "format": "email"},
            "subject": {"type": "string", "maxLength": 120},
            "body": {"type": "string"},
        },
        ["user_id", "to", "subject"],
    ),
    _fn(
        "book_restaurant",
        "Reserve a table.",
        {
            "user_id": {"type": "string", "pattern": "^u[0-9]+$"},
            "restaurant": {"type": "string"},
            "date": {"type": "string", "format": "date"},
            "party_size": {"type": "integer", "minimum": 1, "maximum": 20},
        },
        ["user_id", "restaurant", "date", "party_size"],
    ),
    _fn(
        "convert_currency",
        "Convert an amount between currencies.",
        {
            "amount": {"type": "number", "minimum": 0},
            "from_currency": {"type": "string", "pattern": "^[A-Z]{3}$"},
            "to_currency": {"type": "string", "pattern": "^[A-Z]{3}$", "description": "Target code, not from_currency."},
        },
        ["amount", "from_currency", "to_currency"],
    ),
    _fn(
        "db_query",
        "Read rows from a reporting table.",
        {
            "query": {
                "type": "object",
                "description": "Table and filter conditions; limit bounds the rows returned.",
                "properties": {
                    "table": {"type": "string", "enum": ["orders", "customers", "invoices"]},
                    "filters": {
                        "type": "object",
                        "description": "Column conditions that must hold on table rows.",
                        "properties": {
                            "status": {"type": "string", "enum": ["open", "paid", "void"]},
                            "min_total": {"type": "number", "minimum": 0},
                        },
                    },
                    "columns": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                },
                "required": ["table"],
            },
            "limit": {"type": "integer", "minimum": 1, "maximum": 1000},
            "user_id": {"type": "string", "pattern": "^u[0-9]+$"},
        },
        ["query", "user_id"],
    ),
]


def _i1_tasks() -> list[Task]:
    rows = [
        ("LHR", "JFK", "2025-03-14", 2, "economy", None),
        ("CDG", "NRT", "2025-04-01", 1, "business", {"nonstop": True}),
        ("SFO", "SEA", "2025-05-20", 3, "economy", {"max_price": 250.0}),
        ("FRA", "DXB", "2025-06-02", 1, "first", None),
        ("BOS", "ORD", "2025-02-11", 4, "premium", {"airlines": ["UA", "AA"]}),
        ("MAD", "LIS", "2025-07-09", 2, "economy", {"nonstop": True, "max_price": 120.0}),
        ("SYD", "AKL", "2025-08-15", 1, "economy", None),
        ("YYZ", "MEX", "2025-09-30", 5, "economy", {"airlines": ["AC"]}),
        ("AMS", "BCN", "2025-10-04", 2, "business", None),
        ("HND", "ICN", "2025-11-21", 1, "premium", {"nonstop": False}),
        ("DEN", "LAX", "2025-12-01", 6, "economy", {"max_price": 300.0, "nonstop": True}),
        ("ZRH", "VIE", "2025-01-17", 1, "economy", None),
    ]
    tasks = []
    for i, (o, d, date, n, cabin, filters) in enumerate(rows, 1):
        args: dict[str, Any] = {"origin": o, "destination": d, "date": date, "passengers": n, "cabin": cabin}
        if filters:
            args["filters"] = filters
        tasks.append(Task.from_json({
            "id": f"i1-{i:02d}",
            "x": f"Find {cabin} flights for {n} from {o} to {d} on {date}" + (f" with {json.dumps(filters)}" if filters else ""),
            "expected_tool": "search_flights",
            "expected_args": args,
        }))
    return tasks


def _i2_tasks() -> list[Task]:
    cities = ["Paris", "Lagos", "Osaka", "Lima", "Oslo", "Pune", "Quito", "Perth", "Turin", "Hanoi"]
    tasks = []
    for i, city in enumerate(cities, 1):
        unit = "celsius" if i % 2 else "fahrenheit"
        days = 1 + (i * 3) % 14
        second = (
            {"tool": "get_forecast", "args": {"location": city, "days": days, "unit": unit}}
            if i % 3
            else {"tool": "get_air_quality", "args": {"location": city, "pollutants": ["pm25", "no2"][: 1 + i % 2]}}
        )
        tasks.append(Task.from_json({
            "id": f"i2-{i:02d}",
            "x": f"What's the weather in {city} right now in {unit}, and then {second['tool'].replace('_', ' ')}?",
            "steps": [{"tool": "get_current_weather", "args": {"location": city, "unit": unit}}, second],
        }))
    return tasks


def _i3_tasks() -> list[Task]:
    tasks = []
    specs = [
        [
            ("db_query", {"query": {"table": "orders", "filters": {"status": "open"}}, "user_id": "u17", "limit": 50}),
            ("send_email", {"user_id": "u17", "to": "ops@example.com", "subject": "Open orders"}),
        ],
        [
            ("convert_currency", {"amount": 120.0, "from_currency": "EUR", "to_currency": "USD"}),
            ("book_restaurant", {"user_id": "u3", "restaurant": "Nopa", "date": "2025-05-02", "party_size": 4}),
        ],
        [
            ("create_calendar_event", {"user_id": "u8", "title": "Quarterly review", "date": "2025-06-10", "duration_minutes": 60}),
            ("send_email", {"user_id": "u8", "to": "team@example.com", "subject": "Review invite", "body": "See calendar."}),
            ("book_restaurant", {"user_id": "u8", "restaurant": "Zuni", "date": "2025-06-10", "party_size": 6}),
        ],
        [
            ("db_query", {"query": {"table": "invoices", "filters": {"status": "paid", "min_total": 1000}, "columns": ["id", "total"]}, "user_id": "u2"}),
            ("convert_currency", {"amount": 1000.0, "from_currency": "GBP", "to_currency": "JPY"}),
        ],
        [
            ("book_restaurant", {"user_id": "u40", "restaurant": "Chez Panisse", "date": "2025-09-01", "party_size": 2}),
            ("create_calendar_event", {"user_id": "u40", "title": "Dinner", "date": "2025-09-01", "duration_minutes": 120}),
        ],
        [
            ("db_query", {"query": {"table": "customers"}, "user_id": "u5", "limit": 10}),
            ("send_email", {"user_id": "u5", "to": "sales@example.com", "subject": "Top customers"}),
            ("create_calendar_event", {"user_id": "u5", "title": "Sales sync", "date": "2025-03-03"}),
        ],
        [
            ("convert_currency", {"amount": 75.5, "from_currency": "CAD", "to_currency": "EUR"}),
            ("send_email", {"user_id": "u11", "to": "me@example.com", "subject": "Converted amount", "body": "EUR total"}),
        ],
        [
            ("db_query", {"query": {"table": "orders", "filters": {"min_total": 250}}, "user_id": "u9", "limit": 100}),
            ("convert_currency", {"amount": 250.0, "from_currency": "USD", "to_currency": "CHF"}),
            ("send_email", {"user_id": "u9", "to": "finance@example.com", "subject": "Large orders"}),
        ],
    ]
    for i, steps in enumerate(specs, 1):
        tasks.append(Task.from_json({
            "id": f"i3-{i:02d}",
            "x": f"Task {i}: " + "; then ".join(f"{t} with {json.dumps(a, sort_keys=True)}" for t, a in steps),
            "steps": [{"tool": t, "args": a} for t, a in steps],
        }))
    return tasks


GATED = {"kind": "think_gated", "p_correct_with_think": 0.9, "p_correct_without_think": 0.6}
IGNORE = {"kind": "ignore_think", "p_correct": 0.75}


def builtin_scenarios() -> dict[str, EvalScenario]:
    return {
        "i1": EvalScenario("i1", FLIGHT_TOOLS, _i1_tasks(), dict(GATED), family="I1"),
        "i2": EvalScenario("i2", WEATHER_TOOLS, _i2_tasks(), dict(GATED), family="I2"),
        "i3": EvalScenario("i3", OFFICE_TOOLS, _i3_tasks(), dict(GATED), family="I3"),
        "control": EvalScenario("control", WEATHER_TOOLS, _i2_tasks(), dict(IGNORE), family="I2"),
    }


def load_scenario(name_or_path: str) -> EvalScenario:
    """A bundled scenario by name, or a scenario JSON file."""
    builtins = builtin_scenarios()
    if name_or_path in builtins:
        return builtins[name_or_path]
    with open(name_or_path, encoding="utf-8") as fh:
        return EvalScenario.from_json(json.load(fh))
