import pytest

from malsim import config
from malsim.config import ConfigError
from malsim.malleability import SpawnStrategy
from malsim.scheduler import Policy


def test_defaults_build():
    cfg = config.load()
    assert cfg.policy is Policy.DYNRES_BASELINE
    assert cfg.cluster.node_count == 8 and cfg.inhibit_iter == 2
    assert cfg.workload.limits.ladder() == (1, 2, 4)


def test_packaged_config(replica_cfg):
    assert replica_cfg.node_drain > 0
    assert replica_cfg.workload.job_count == 1000
    assert replica_cfg.workload.grid == (1024, 127, 31)


def test_overrides_are_typed():
    cfg = config.load(None, ["cluster.node_count=12", "cost.base_overhead=1", 'policy="static"',
                             "workload.step_times.2=0.8"])
    assert cfg.cluster.node_count == 12
    assert cfg.cost.base_overhead == 1.0
    assert cfg.policy is Policy.STATIC
    assert cfg.workload.model().step_time_table[2] == 0.8


def test_bare_string_override():
    assert config.load(None, ["policy=dynres-merge"]).policy is Policy.DYNRES_MERGE


def test_policy_sets_strategy():
    cfg = config.load(None, ["policy=dynres-merge", "malleability.strategy=baseline"])
    assert cfg.workload.strategy is SpawnStrategy.MERGE


@pytest.mark.parametrize("override,key", [
    ("cluster.nodes=3", "cluster.nodes"),
    ("cluster.node_count=zero", "cluster.node_count"),
    ("cluster.node_count=0", "cluster"),
    ("policy=fifo", "policy"),
    ("malleability.limits.preferred=3", "malleability.limits"),
    ("malleability.inhibit_iter=0", "malleability.inhibit_iter"),
    ("cluster.node_drain=-1", "cluster.node_drain"),
    ("workload.grid=[1,2]", "workload.grid"),
    ("cost=3", "cost"),
    ("nonsense", "nonsense"),
])
def test_errors_name_the_key(override, key):
    with pytest.raises(ConfigError) as exc:
        config.load(None, [override])
    assert exc.value.key == key
    assert key in str(exc.value)


def test_file_and_relative_trace(tmp_path):
    (tmp_path / "c.toml").write_text('policy = "static"\n[workload]\ntrace = "t.csv"\n')
    cfg = config.load(tmp_path / "c.toml")
    assert cfg.trace == str(tmp_path / "t.csv")


def test_missing_and_broken_files(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "none.toml")
    (tmp_path / "b.toml").write_text("policy = \n")
    with pytest.raises(ConfigError):
        config.load(tmp_path / "b.toml")


def test_fragment_round_trips(tmp_path):
    text = config.dumps_fragment({"cluster": {"node_drain": 1.5}, "workload": {"scaling_alpha": 0.7}}, "note")
    p = tmp_path / "f.toml"
    p.write_text(text)
    cfg = config.load(p)
    assert cfg.node_drain == 1.5 and cfg.workload.scaling_alpha == 0.7
