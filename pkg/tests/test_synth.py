import pytest

from matchcert.errors import MatchcertError
from matchcert.graphs import by_x
from matchcert.synth import (
    ErdosRenyi,
    GeneratorConfig,
    PreferentialAttachment,
    generate_pair,
)


def test_no_noise_identical_copies():
    cfg = GeneratorConfig(n_entities=40, base_model=ErdosRenyi(0.1), rng_seed=1)
    pair, truth = generate_pair(cfg)
    assert len(pair.x_net.nodes) == 40
    assert len(pair.y_net.nodes) == 40
    assert len(truth.pairs) == 40
    assert len(pair.x_net.edges) == len(pair.y_net.edges)
    # identity correspondence: entity index is shared
    for x, y in truth.pairs:
        assert x[1:] == y[1:]
        assert pair.x_net.attrs[x]["uid"] == x[1:]


def test_all_dropped_is_degenerate():
    cfg = GeneratorConfig(
        n_entities=10, base_model=ErdosRenyi(0.2), node_drop_x=1.0, rng_seed=2
    )
    with pytest.raises(MatchcertError, match="degenerate-config"):
        generate_pair(cfg)


def test_seed_determinism():
    cfg = GeneratorConfig(
        n_entities=80,
        base_model=ErdosRenyi(0.06),
        edge_retain_x=0.8,
        edge_retain_y=0.7,
        node_drop_x=0.1,
        node_drop_y=0.15,
        attr_noise=0.2,
        rng_seed=77,
    )
    p1, m1 = generate_pair(cfg)
    p2, m2 = generate_pair(cfg)
    assert p1 == p2
    assert m1.pairs == m2.pairs
    p3, _ = generate_pair(
        GeneratorConfig.from_json_dict({**cfg.to_json_dict(), "rng_seed": 78})
    )
    assert p3 != p1


def test_truth_size_matches_joint_survivors():
    cfg = GeneratorConfig(
        n_entities=200,
        base_model=ErdosRenyi(0.03),
        node_drop_x=0.2,
        node_drop_y=0.2,
        rng_seed=3,
    )
    pair, truth = generate_pair(cfg)
    x_idx = {n[1:] for n in pair.x_net.nodes}
    y_idx = {n[1:] for n in pair.y_net.nodes}
    assert len(truth.pairs) == len(x_idx & y_idx)
    # some x nodes must have no actual match, so the matched-node subset of
    # X is strictly smaller than X
    matched_x = set(by_x(truth))
    assert matched_x < pair.x_net.nodes


def test_attr_noise_corrupts_y_only():
    cfg = GeneratorConfig(
        n_entities=300, base_model=ErdosRenyi(0.01), attr_noise=0.3, rng_seed=4
    )
    pair, truth = generate_pair(cfg)
    corrupted = [
        y for y in pair.y_net.nodes if pair.y_net.attrs[y]["uid"].endswith("~")
    ]
    frac = len(corrupted) / len(pair.y_net.nodes)
    assert 0.2 < frac < 0.4
    for x in pair.x_net.nodes:
        assert not pair.x_net.attrs[x]["uid"].endswith("~")


def test_preferential_attachment_shape():
    cfg = GeneratorConfig(
        n_entities=120, base_model=PreferentialAttachment(2), rng_seed=5
    )
    pair, _ = generate_pair(cfg)
    # m edges per newcomer plus the seed clique
    assert len(pair.x_net.edges) == 3 + (120 - 3) * 2


def test_config_json_roundtrip():
    cfg = GeneratorConfig(
        n_entities=50,
        base_model=PreferentialAttachment(3),
        edge_retain_x=0.9,
        attr_noise=0.05,
        rng_seed=11,
    )
    assert GeneratorConfig.from_json_dict(cfg.to_json_dict()) == cfg
