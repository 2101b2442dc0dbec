import json

import pytest

from tradechains import linkio
from tradechains.inference import Link, LinkSet


@pytest.fixture
def sample_links() -> LinkSet:
    return LinkSet(
        (
            Link(output="cars", input="engine parts", merged_rank=2, backward_score=12),
            Link(output="cars", input="tires", merged_rank=4, backward_score=9),
            Link(output='odd "name"', input="cloth", merged_rank=3, backward_score=2),
        )
    )


def test_jsonl_round_trip(tmp_path, sample_links):
    path = tmp_path / "links.jsonl"
    linkio.write_jsonl(sample_links, path)
    assert linkio.read_jsonl(path) == sample_links
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"output", "input", "merged_rank", "backward_score"}


def test_jsonl_rejects_garbage_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"output": "a", "input": "b"}\nnot json\n')
    with pytest.raises(ValueError, match="line 2"):
        linkio.read_jsonl(path)


def test_edge_csv_layout(tmp_path, sample_links):
    path = tmp_path / "edges.csv"
    linkio.write_edge_csv(sample_links, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "input,output,merged_rank,backward_score"
    assert lines[1] == "engine parts,cars,2,12"


def test_dot_output_quotes_names(tmp_path, sample_links):
    path = tmp_path / "links.dot"
    linkio.write_dot(sample_links, path)
    text = path.read_text()
    assert text.startswith("digraph value_chain {")
    assert '"engine parts" -> "cars" [label="2"];' in text
    assert '\\"name\\"' in text  # embedded quotes escaped
    assert text.rstrip().endswith("}")


def test_writes_are_byte_identical_across_runs(tmp_path, sample_links):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    linkio.write_jsonl(sample_links, a)
    linkio.write_jsonl(sample_links, b)
    assert a.read_bytes() == b.read_bytes()
