"""JSON Schemas for every machine-readable artifact the CLI writes."""

from __future__ import annotations

from typing import Any

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}
_interval = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}
_str_list = {"type": "array", "items": {"type": "string"}}
_pair = {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2}

ESTIMATE = {
    "type": "object",
    "required": ["surface", "point_bits", "ci_low_bits", "ci_high_bits", "n", "k_effective", "reliable"],
    "properties": {
        "surface": {"type": "string", "minLength": 1},
        "point_bits": _nonneg,
        "ci_low_bits": _nonneg,
        "ci_high_bits": _nonneg,
        "n": {"type": "integer", "minimum": 0},
        "k_effective": {"type": "integer", "minimum": 0},
        "reliable": {"type": "boolean"},
    },
}

GRAPH = {
    "type": "object",
    "required": ["nodes", "edges"],
    "properties": {
        "nodes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["surface", "h_bits", "ci", "reliable"],
                "properties": {
                    "surface": {"type": "string", "minLength": 1},
                    "h_bits": _nonneg,
                    "ci": _interval,
                    "reliable": {"type": "boolean"},
                    "entropy_override": _nonneg,
                    "n": {"type": "integer", "minimum": 0},
                    "k_effective": {"type": "integer", "minimum": 0},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "mi_bits", "ci", "reliable", "n"],
                "properties": {
                    "a": {"type": "string"},
                    "b": {"type": "string"},
                    "mi_bits": _nonneg,
                    "ci": _interval,
                    "reliable": {"type": "boolean"},
                    "n": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

ESTIMATES_OUTPUT = {
    "type": "object",
    "required": ["estimates", "graph"],
    "properties": {"estimates": {"type": "array", "items": ESTIMATE}, "graph": GRAPH},
}

BOUND = {
    "type": "object",
    "required": ["subset", "chow_liu", "naive"],
    "properties": {
        "subset": _str_list,
        "chow_liu": {
            "type": "object",
            "required": ["upper_bits", "method", "tree_edges", "omitted_edges"],
            "properties": {
                "upper_bits": _nonneg,
                "method": {"enum": ["chow_liu", "naive_sum"]},
                "tree_edges": {"type": "array", "items": _pair},
                "omitted_edges": {"type": "integer", "minimum": 0},
            },
        },
        "naive": {"type": "object", "required": ["upper_bits"], "properties": {"upper_bits": _nonneg}},
    },
}

VERDICTS = {
    "type": "object",
    "required": ["surfaces", "pairs"],
    "properties": {
        "surfaces": _str_list,
        "pairs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "verdict", "tv", "tv_interval", "confidence", "n"],
                "properties": {
                    "verdict": {"enum": ["Correlated", "Independent", "Insufficient"]},
                    "tv": {"type": "number", "minimum": 0, "maximum": 1},
                    "tv_interval": _interval,
                    "confidence": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "n": {"type": "integer", "minimum": 0},
                },
            },
        },
    },
}

ORDER = {"type": "object", "required": ["order", "bandwidth_before", "bandwidth_after"],
         "properties": {"order": _str_list, "bandwidth_before": {"type": "integer"}, "bandwidth_after": {"type": "integer"}}}

DENDROGRAM: dict[str, Any] = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "weight": {"type": ["number", "null"]},
        "size": {"type": "integer"},
        "children": {"type": "array", "items": {"$ref": "#"}},
    },
}

CLUSTERS = {
    "type": "object",
    "required": ["clusters", "dendrogram"],
    "properties": {
        "clusters": {"type": "array", "items": _str_list},
        "dendrogram": {"type": "object"},
        "merges": {"type": "array"},
    },
}

PLAN = {
    "type": "object",
    "required": ["rounds", "residual", "total_clients"],
    "properties": {
        "rounds": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["subset", "clients"],
                "properties": {"subset": _str_list, "clients": {"type": "integer", "minimum": 0}},
            },
        },
        "residual": {"type": "array"},
        "total_clients": {"type": "integer", "minimum": 0},
    },
}

PLAN_REPORT = {
    "type": "object",
    "required": ["ok", "total_clients", "uncovered", "over_budget_rounds"],
    "properties": {"ok": {"type": "boolean"}, "total_clients": {"type": "integer"}},
}

REPORT_RECORD = {
    "type": "object",
    "required": ["client_id", "surface", "site", "timestamp"],
    "properties": {
        "client_id": {"type": "integer", "minimum": 0},
        "surface": {"type": "string"},
        "value": {"type": "string"},
        "site": {"type": "string"},
        "timestamp": {"type": "integer", "minimum": 0},
    },
}

SESSION = {
    "type": "object",
    "required": ["client", "site", "window_start", "surfaces", "first_party_surfaces", "third_party_surfaces", "has_signature"],
    "properties": {
        "window_start": {"type": "integer", "minimum": 0, "multipleOf": 28},
        "surfaces": _str_list,
        "has_signature": {"type": "boolean"},
    },
}

HISTOGRAM = {
    "type": "object",
    "required": ["edges", "mass", "normalization"],
    "properties": {
        "edges": {"type": "array", "items": _nonneg},
        "mass": {"type": "array", "items": _nonneg},
        "normalization": {"type": "string"},
    },
}

BLOCK_IMPACT = {
    "type": "object",
    "required": ["edges", "baseline", "intervention", "delta"],
    "properties": {k: {"type": "array", "items": _num} for k in ("edges", "baseline", "intervention", "delta")},
}

MANIFEST = {
    "type": "object",
    "required": ["version", "seed", "inputs", "stages", "status"],
    "properties": {
        "version": {"type": "string"},
        "seed": {"type": "integer"},
        "inputs": {"type": "object", "additionalProperties": {"type": "string"}},
        "stages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "status", "outputs"],
                "properties": {"status": {"enum": ["ok", "failed", "skipped"]}, "outputs": _str_list},
            },
        },
        "status": {"enum": ["ok", "failed"]},
    },
}

SCHEMAS: dict[str, dict[str, Any]] = {
    "estimates": ESTIMATES_OUTPUT,
    "graph": GRAPH,
    "bound": BOUND,
    "verdicts": VERDICTS,
    "order": ORDER,
    "clusters": CLUSTERS,
    "plan": PLAN,
    "plan_report": PLAN_REPORT,
    "report_record": REPORT_RECORD,
    "session": SESSION,
    "histogram": HISTOGRAM,
    "block_impact": BLOCK_IMPACT,
    "manifest": MANIFEST,
    "dendrogram": DENDROGRAM,
}


def validate(name: str, instance: Any) -> None:
    """Validate ``instance`` against the named schema (requires jsonschema)."""
    import jsonschema

    jsonschema.validate(instance, SCHEMAS[name])
