import json

import pytest

from structdiv.dataset import InstanceRecord, filter_frequency_cap, ingest, write_pool
from structdiv.errors import DuplicateId, MalformedRecord, ParseFailure
from structdiv.substructures import Kind, SubstructureConfig


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def row(program, rid=None, utterance="u"):
    obj = {"utterance": utterance, "program": program}
    if rid is not None:
        obj["id"] = rid
    return json.dumps(obj)


def test_ingest_three_lines(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("f ( a )", "x"), row("g ( 3 )", "y"), row("h", "z")])
    pool, report = ingest(path)
    assert [r.id for r in pool] == ["x", "y", "z"] and report.ok
    assert pool[1].template == "g ( @NUM )"
    assert all(r.bag is not None and r.bag.keys for r in pool)


def test_missing_ids_are_line_numbers(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("a"), "", row("b")])
    pool, _ = ingest(path)
    assert [r.id for r in pool] == ["000001", "000003"]


def test_malformed_line(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("a", "1"), json.dumps({"utterance": "no program"})])
    with pytest.raises(MalformedRecord) as err:
        ingest(path)
    assert err.value.line == 2
    pool, report = ingest(path, strict=False)
    assert len(pool) == 1 and [m.line for m in report.malformed] == [2]


@pytest.mark.parametrize("bad", ["{not json", "[1, 2]", json.dumps({"utterance": 1, "program": "a"}),
                                 json.dumps({"id": [1], "utterance": "u", "program": "a"})])
def test_malformed_variants(tmp_path, bad):
    with pytest.raises(MalformedRecord):
        ingest(write_lines(tmp_path / "p.jsonl", [bad]))


def test_duplicate_ids(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("a", "same"), row("b", "same")])
    with pytest.raises(DuplicateId):
        ingest(path)


def test_parse_failure(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("f ( a", "bad"), row("f ( a )", "good")])
    with pytest.raises(ParseFailure):
        ingest(path)
    pool, report = ingest(path, strict=False)
    assert [r.id for r in pool] == ["good"]
    assert [f.instance_id for f in report.parse_failures] == ["bad"]


def test_bag_kind_follows_config(tmp_path):
    path = write_lines(tmp_path / "p.jsonl", [row("f ( a , b )", "x", "find the dog")])
    assert ingest(path, cfg=SubstructureConfig(Kind.TEMPLATE))[0][0].bag.keys == {"T:f ( a , b )"}
    assert len(ingest(path, cfg=SubstructureConfig(Kind.BIGRAM))[0][0].bag.keys) == 3
    assert len(ingest(path, cfg=SubstructureConfig(Kind.NGRAM, n_max=2))[0][0].bag.keys) == 5


def test_write_pool_round_trip(tmp_path):
    rows = [InstanceRecord("a", "u1", "f ( x )"), {"id": "b", "utterance": "u2", "program": "g"}]
    write_pool(tmp_path / "out.jsonl", rows)
    pool, _ = ingest(tmp_path / "out.jsonl")
    assert [(r.id, r.program) for r in pool] == [("a", "f ( x )"), ("b", "g")]


def recs(programs):
    return [InstanceRecord(str(i), "", p) for i, p in enumerate(programs)]


def test_frequency_cap():
    pool = recs(["hot"] * 15 + [f"p{i}" for i in range(85)])
    kept = filter_frequency_cap(pool, 0.12)
    assert len(kept) == 85 and all(r.program != "hot" for r in kept)
    assert filter_frequency_cap(pool, 1.0) == pool
    assert filter_frequency_cap(recs(["same"] * 10), 0.5) == []
    # exactly at the threshold is kept
    at_limit = recs(["a"] * 12 + [f"u{i}" for i in range(88)])
    assert len(filter_frequency_cap(at_limit, 0.12)) == 100
    with pytest.raises(ValueError):
        filter_frequency_cap(pool, 0)
