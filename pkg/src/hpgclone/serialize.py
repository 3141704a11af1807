"""JSON and Graphviz DOT serialization of :class:`HpgModel`."""

from __future__ import annotations

import json
from typing import Dict, Iterator

import jsonschema

from .model import FINAL_STATE, START_STATE, HpgModel, StateId
from .sessions import FINAL, START

FORMAT_VERSION = 1

MODEL_SCHEMA = {
    "type": "object",
    "required": ["format_version", "alpha", "states", "links"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "alpha": {"type": "number", "minimum": 0, "maximum": 1},
        "order": {"type": "integer", "minimum": 2},
        "states": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind", "page", "clone_index"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "kind": {"enum": ["start", "final", "page"]},
                    "page": {"type": ["string", "null"]},
                    "clone_index": {"type": "integer", "minimum": 0},
                },
            },
        },
        "links": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "to", "weight"],
                "properties": {
                    "from": {"type": "integer", "minimum": 0},
                    "to": {"type": "integer", "minimum": 0},
                    "weight": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
    },
}


class ModelFormatError(ValueError):
    pass


def model_to_dict(model: HpgModel, order: int | None = None) -> dict:
    if not model.page_states():
        raise ValueError("refusing to export a model without page states")
    states = model.states()
    ids = {s: n for n, s in enumerate(states)}
    doc = {"format_version": FORMAT_VERSION, "alpha": model.alpha}
    if order is not None:
        doc["order"] = order
    doc["pages"] = list(model.vocab)
    doc["states"] = [
        {"id": ids[s], "kind": s.kind,
         "page": model.vocab[s.page] if s.is_page else None,
         "clone_index": s.clone}
        for s in states
    ]
    doc["links"] = [{"from": ids[a], "to": ids[b], "weight": w} for a, b, w in model.links()]
    return doc


def export_json(model: HpgModel, order: int | None = None) -> str:
    # json writes floats with repr(), which round-trips exactly
    return json.dumps(model_to_dict(model, order), indent=1)


def model_from_dict(doc) -> HpgModel:
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ModelFormatError(f"invalid model document at {path}: {exc.message}") from None
    vocab = list(doc.get("pages", []))
    index = {name: i for i, name in enumerate(vocab)}
    by_id: Dict[int, StateId] = {}
    for entry in doc["states"]:
        kind = entry["kind"]
        if kind == "start":
            state = START_STATE
        elif kind == "final":
            state = FINAL_STATE
        else:
            name = entry["page"]
            if name is None:
                raise ModelFormatError(f"page state {entry['id']} has no page name")
            if name not in index:
                index[name] = len(vocab)
                vocab.append(name)
            state = StateId(index[name], entry["clone_index"])
        if entry["id"] in by_id:
            raise ModelFormatError(f"duplicate state id {entry['id']}")
        by_id[entry["id"]] = state
    links: Dict[StateId, Dict[StateId, float]] = {}
    for n, link in enumerate(doc["links"]):
        try:
            src, dst = by_id[link["from"]], by_id[link["to"]]
        except KeyError as exc:
            raise ModelFormatError(f"invalid model document at links/{n}: unknown state {exc}") from None
        if src.page == FINAL or dst.page == START:
            raise ModelFormatError(f"invalid model document at links/{n}: link into S or out of F")
        links.setdefault(src, {})[dst] = link["weight"]
    return HpgModel(vocab, doc["alpha"], links)


def import_json(text: str | bytes) -> HpgModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid model document: {exc}") from None
    return model_from_dict(doc)


def _quote(s: str) -> str:
    return '"{}"'.format(s.replace("\\", "\\\\").replace('"', r"\""))


def _fmt_weight(w) -> str:
    if isinstance(w, int) or float(w).is_integer():
        return str(int(w))
    return f"{w:.4g}"


def iter_dot(model: HpgModel) -> Iterator[str]:
    """Yield the lines of a Graphviz digraph, edges labelled ``count (prob)``."""
    if not model.page_states():
        raise ValueError("refusing to export a model without page states")
    yield "digraph hpg {\n"
    yield "  rankdir=LR;\n"
    yield f"  {_quote('S')} [shape=doublecircle, style=filled, fillcolor=palegreen];\n"
    yield f"  {_quote('F')} [shape=doublecircle, style=filled, fillcolor=lightpink];\n"
    for s in model.page_states():
        style = ", style=dashed" if s.clone else ""
        yield f"  {_quote(model.state_name(s))} [shape=circle{style}];\n"
    for a, b, w in model.links():
        label = f"{_fmt_weight(w)} ({model.prob(a, b):.4g})"
        yield (f"  {_quote(model.state_name(a))} -> {_quote(model.state_name(b))}"
               f" [label={_quote(label)}];\n")
    yield "}\n"


def export_dot(model: HpgModel) -> str:
    return "".join(iter_dot(model))


def export_model(model: HpgModel, format: str = "json") -> str:
    if format == "json":
        return export_json(model)
    if format == "dot":
        return export_dot(model)
    raise ValueError(f"unknown export format {format!r}")


def import_model(data: str | bytes) -> HpgModel:
    return import_json(data)
