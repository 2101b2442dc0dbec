"""Read/write link sets: JSON lines, edge-list CSV, and Graphviz DOT."""

from __future__ import annotations

import csv
import json

from .inference import Link, LinkSet


def write_jsonl(links: LinkSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for link in links:
            fh.write(
                json.dumps(
                    {
                        "output": link.output,
                        "input": link.input,
                        "merged_rank": link.merged_rank,
                        "backward_score": link.backward_score,
                    }
                )
                + "\n"
            )


def read_jsonl(path) -> LinkSet:
    links = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                links.append(
                    Link(
                        output=rec["output"],
                        input=rec["input"],
                        merged_rank=int(rec.get("merged_rank", 0)),
                        backward_score=int(rec.get("backward_score", 0)),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as err:
                raise ValueError(f"{path}: line {lineno}: bad link record: {err}") from None
    return LinkSet(tuple(links))


def write_edge_csv(links: LinkSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["input", "output", "merged_rank", "backward_score"])
        for link in links:
            writer.writerow([link.input, link.output, link.merged_rank, link.backward_score])


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_dot(links: LinkSet, path, graph_name: str = "value_chain") -> None:
    """Directed graph, input -> output, merged rank as edge label."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"digraph {graph_name} {{\n")
        for link in links:
            fh.write(
                f"  {_dot_quote(link.input)} -> {_dot_quote(link.output)}"
                f' [label="{link.merged_rank}"];\n'
            )
        fh.write("}\n")
