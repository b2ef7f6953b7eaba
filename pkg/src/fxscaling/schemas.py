"""JSON Schemas for the machine-readable outputs."""

_num = {"type": "number"}
_opt_num = {"type": ["number", "null"]}
_iso = {"type": "string", "pattern": r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.\d{3}Z$"}

BOOTSTRAP = {
    "type": "object",
    "required": ["mean", "sd", "B", "m", "seed"],
    "properties": {"mean": _num, "sd": {"type": "number", "minimum": 0},
                   "B": {"type": "integer", "minimum": 1}, "m": {"type": "integer", "minimum": 2},
                   "seed": {"type": "integer"}},
}

FIT_REPORT = {
    "type": "object",
    "required": ["alpha", "A", "normr", "n_used", "excluded", "points"],
    "properties": {
        "alpha": _num,
        "A": {"type": "number", "exclusiveMinimum": 0},
        "normr": {"type": "number", "minimum": 0},
        "n_used": {"type": "integer", "minimum": 2},
        "excluded": {"type": "array", "items": {
            "type": "object", "required": ["pair", "reason"],
            "properties": {"pair": {"type": "string"}, "reason": {"type": "string"}}}},
        "points": {"type": "array", "items": {"type": "array", "items": _num,
                                              "minItems": 2, "maxItems": 2}},
        "bootstrap": {"oneOf": [BOOTSTRAP, {"type": "null"}]},
    },
}

_corr_brief = {"oneOf": [{"type": "null"}, {
    "type": "object", "required": ["global_avg", "defined_fraction"],
    "properties": {"global_avg": _num,
                   "defined_fraction": {"type": "number", "minimum": 0, "maximum": 1}}}]}

CORR_MATRIX = {
    "type": "object",
    "required": ["tau", "pairs", "matrix", "global_avg", "defined_fraction"],
    "properties": {
        "tau": {"type": "integer"},
        "pairs": {"type": "array", "items": {"type": "string"}},
        "matrix": {"type": "array", "items": {"type": "array", "items": _opt_num}},
        "global_avg": _num,
        "defined_fraction": {"type": "number", "minimum": 0, "maximum": 1},
    },
}

WEEK_ROW = {
    "type": "object",
    "required": ["label", "t0", "t1", "fit_P", "fit_D", "corr_P", "corr_D", "pd0",
                 "bootstrap_P", "bootstrap_D", "flags"],
    "properties": {
        "label": {"type": "string"},
        "t0": _iso, "t1": _iso,
        "fit_P": {"oneOf": [FIT_REPORT, {"type": "null"}]},
        "fit_D": {"oneOf": [FIT_REPORT, {"type": "null"}]},
        "corr_P": _corr_brief, "corr_D": _corr_brief,
        "pd0": _opt_num,
        "bootstrap_P": {"oneOf": [BOOTSTRAP, {"type": "null"}]},
        "bootstrap_D": {"oneOf": [BOOTSTRAP, {"type": "null"}]},
        "flags": {"type": "array", "items": {"type": "string"}},
    },
}

REGRESSION = {
    "type": "object",
    "required": ["a", "b", "rms", "pearson_r", "n"],
    "properties": {"a": _num, "b": _num, "rms": {"type": "number", "minimum": 0},
                   "pearson_r": {"type": ["number", "null"], "minimum": -1, "maximum": 1},
                   "n": {"type": "integer", "minimum": 2}},
}

MANIFEST = {
    "type": "object",
    "required": ["subcommand", "config", "inputs", "outputs", "versions", "wall_time_s"],
    "properties": {
        "subcommand": {"type": "string"},
        "config": {"type": "object"},
        "inputs": {"type": "object", "additionalProperties": {"type": "string"}},
        "outputs": {"type": "array", "items": {"type": "string"}},
        "versions": {"type": "object"},
        "wall_time_s": {"type": "number", "minimum": 0},
    },
}

REJECTS = {
    "type": "array",
    "items": {"type": "object", "required": ["line_number", "reason"],
              "properties": {"line_number": {"type": "integer", "minimum": 1},
                             "reason": {"type": "string"}}},
}
