from fractions import Fraction

import pytest

from unitpart.artifacts import (
    parse_blocks_text,
    parse_factors,
    parse_ladder_text,
    parse_stages_text,
    render_blocks,
    render_ladder,
    render_stages,
    sniff_format,
    write_text,
)
from unitpart.dyadic_engine import (
    audit_stage,
    extend_stage,
    group_stage,
    init_stage1,
    prefix_stability_report,
)
from unitpart.errors import CheckpointFormatError
from unitpart.starlab import (
    DEFAULT_EFFORT,
    Factorization,
    coprime_certificate,
    divisibility_chain_check,
    format_factors,
    ladder,
    observed_prime_powers,
    observed_primes,
)
from unitpart.towers import sigma_of, TowerMultiset
from unitpart.verify import verify_artifact, verify_text
from unitpart.vital_engine import Block, Parameters, blocks_stream, group_blocks


def blocks_fixture():
    params = Parameters(1, 2, 3)
    _, blocks = blocks_stream(params, 4)
    groups = group_blocks(blocks, params)
    return params, blocks, groups, render_blocks(params, blocks, groups)


def stages_fixture():
    params = Parameters(1, 1, 1)
    fams = [init_stage1(params)]
    for _ in range(2):
        fams.append(extend_stage(fams[-1]))
    reports = [audit_stage(f) for f in fams]
    stabilities = [None] + [
        prefix_stability_report(a, b, 2 * params.kd + a.stage)
        for a, b in zip(fams, fams[1:])
    ]
    groupings = [group_stage(f) for f in fams]
    text = render_stages(params, fams, reports, stabilities, groupings)
    return params, fams, text


def ladder_fixture():
    x, depth = 2, 5
    lad = ladder(x, depth, DEFAULT_EFFORT)
    targets = [x]
    y = x
    for _ in range(depth):
        targets.append(y + 1)
        y = y * (y + 1)
    text = render_ladder(
        x,
        depth,
        DEFAULT_EFFORT,
        lad,
        targets,
        divisibility_chain_check(x, depth),
        coprime_certificate(x, depth),
        observed_primes(lad),
        observed_prime_powers(lad),
    )
    return lad, text


def test_blocks_roundtrip():
    params, blocks, groups, text = blocks_fixture()
    parsed = parse_blocks_text(text)
    assert parsed.params == params
    assert parsed.blocks == list(blocks)
    assert parsed.groups == list(groups)


def test_blocks_roundtrip_past_interpreter_digit_cap():
    # deep-stage elements run to tens of thousands of digits; rendering
    # and reparsing them must survive the int/str conversion cap
    big = (1 << 20000) + 1
    block = Block(
        index=0,
        elements=(2, big),
        sigma=Fraction(1, 2) + Fraction(1, big),
        steps_used=0,
        frontier_after=2,
    )
    text = render_blocks(Parameters(1, 1, 1), [block])
    assert str(big) in text
    assert parse_blocks_text(text).blocks == [block]


def test_verify_flags_inconsistent_max():
    _, _, _, text = blocks_fixture()
    bad = text.replace("block\t1\t4,12\t1/3\t1\t4\t12", "block\t1\t4,12\t1/3\t1\t4\t13")
    assert bad != text
    report = verify_text(bad)
    assert not report.ok
    assert any("stored max" in c.name for c in report.failures())


def test_stages_roundtrip():
    params, fams, text = stages_fixture()
    parsed = parse_stages_text(text)
    assert parsed.params == params
    for fam, record in zip(fams, parsed.stages):
        assert record.stage == fam.stage
        assert record.sets == list(fam.sets)
        assert record.sigmas == [
            sigma_of(TowerMultiset.from_elements(s)) for s in fam.sets
        ]
        assert record.audit_pass
    assert parsed.stages[0].stability is None
    assert parsed.stages[1].stability == 3


def test_ladder_roundtrip():
    lad, text = ladder_fixture()
    parsed = parse_ladder_text(text)
    assert parsed.x == 2
    assert parsed.depth == 5
    assert [s.factorization.factors for s in parsed.segments] == [
        seg.factors for seg in lad.segments
    ]
    assert parsed.chain_ok
    assert parsed.certificate == [3, 7, 43, 1807, 3263443]
    assert parsed.primes == (2, 3, 7, 13, 43, 139, 3263443)


def test_sniff_format():
    assert sniff_format("unitpart blocks v1\n") == "blocks"
    assert sniff_format("unitpart stages v1\n") == "stages"
    assert sniff_format("unitpart ladder v1\n") == "ladder"
    with pytest.raises(CheckpointFormatError):
        sniff_format("something else\n")
    with pytest.raises(CheckpointFormatError):
        sniff_format("")


def test_parse_factors_roundtrip():
    for s in ("", "2^2", "13·139", "2·903?", "2^3·3·157^2"):
        assert format_factors(parse_factors(s)) == s
    assert parse_factors("2·903?") == Factorization(((2, 1),), cofactor=903)


def test_verify_passes_honest_artifacts(tmp_path):
    for name, text in (
        ("blocks.tsv", blocks_fixture()[3]),
        ("stages.tsv", stages_fixture()[2]),
        ("ladder.tsv", ladder_fixture()[1]),
    ):
        report = verify_text(text)
        assert report.ok, report.summary()
        path = tmp_path / name
        write_text(path, text)
        assert verify_artifact(path).ok


def test_verify_catches_block_element_mutation():
    _, _, _, text = blocks_fixture()
    bad = text.replace("6,14,21", "6,15,21")
    assert bad != text
    report = verify_text(bad)
    assert not report.ok
    assert any("sigma" in c.name for c in report.failures())


def test_verify_catches_dishonest_block_sigma():
    _, _, _, text = blocks_fixture()
    bad = text.replace("block\t1\t4,12\t1/3", "block\t1\t4,12\t1/4", 1)
    report = verify_text(bad)
    assert not report.ok
    assert any("stored sigma honest" in c.name for c in report.failures())


def test_verify_catches_dishonest_frontier():
    _, _, _, text = blocks_fixture()
    bad = text.replace("block\t1\t4,12\t1/3\t1\t4\t12", "block\t1\t4,12\t1/3\t1\t5\t12")
    report = verify_text(bad)
    assert not report.ok
    assert any("frontier" in c.name for c in report.failures())


def test_verify_catches_stage_set_mutation():
    _, _, text = stages_fixture()
    bad = text.replace("set\t1\t1\t3,6\t1/2", "set\t1\t1\t3,7\t1/2")
    assert bad != text
    report = verify_text(bad)
    assert not report.ok


def test_verify_catches_dishonest_stability():
    _, _, text = stages_fixture()
    bad = text.replace("stability=3", "stability=9", 1)
    assert bad != text
    report = verify_text(bad)
    assert not report.ok
    assert any("stability" in c.name for c in report.failures())


def test_verify_catches_ladder_factor_mutation():
    _, text = ladder_fixture()
    bad = text.replace("\t13·139\t", "\t13·140\t")
    assert bad != text
    report = verify_text(bad)
    assert not report.ok
    names = [c.name for c in report.failures()]
    assert any("product" in n or "prime" in n for n in names)


def test_verify_catches_flipped_chain_flag():
    _, text = ladder_fixture()
    bad = text.replace("chain\tm=5\tpass", "chain\tm=5\tfail")
    assert bad != text
    report = verify_text(bad)
    assert not report.ok
