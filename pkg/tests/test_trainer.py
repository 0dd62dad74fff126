import copy
import json

import numpy as np
import pytest
import torch

from mccsod.config import RunConfig, TrainConfig, load_config_file
from mccsod.data import load_dataset
from mccsod.encoder import BLOCK_CHANNELS, BLOCK_DEPTHS, archive_key
from mccsod.errors import ConfigurationError, NumericError
from mccsod.checkpoint import load_checkpoint
from mccsod.trainer import (
    SmokeResult,
    TrainLog,
    build_optimizer,
    lr_for_epoch,
    overfit_smoke,
    train,
)
import mccsod.trainer as trainer_module


LOSS_KEYS = [f"loss_{kind}{t}" for t in range(1, 6) for kind in ("s", "e")]


@pytest.fixture()
def manifest(toy_root):
    return load_dataset(toy_root, "train")


class TestLrSchedule:
    def test_default_schedule(self):
        cfg = TrainConfig()
        for epoch in range(1, 31):
            assert lr_for_epoch(cfg, epoch) == 1e-4
        for epoch in (31, 32, 39):
            assert lr_for_epoch(cfg, epoch) == pytest.approx(1e-5)

    def test_custom_decay_point_and_factor(self):
        cfg = TrainConfig(initial_lr=2e-3, lr_decay_epoch=2, lr_decay_factor=4.0)
        assert lr_for_epoch(cfg, 2) == 2e-3
        assert lr_for_epoch(cfg, 3) == pytest.approx(5e-4)

    def test_optimizer_settings(self):
        net = torch.nn.Linear(3, 1)
        opt = build_optimizer(net, TrainConfig(initial_lr=3e-4))
        group = opt.param_groups[0]
        assert isinstance(opt, torch.optim.Adam)
        assert group["lr"] == 3e-4
        assert group["betas"] == (0.9, 0.999)
        assert group["eps"] == 1e-8
        assert group["weight_decay"] == 0.0


class TestTrainLog:
    def test_iterations_filters_summaries(self):
        log = TrainLog(records=[])
        log.append({"iteration": 1, "epoch": 1, "total": 2.0})
        log.append({"epoch_summary": 1, "lr": 1e-4, "seconds": 0.5})
        log.append({"iteration": 2, "epoch": 2, "total": 1.5})
        assert [r["iteration"] for r in log.iterations()] == [1, 2]

    def test_jsonl_round_trip(self, tmp_path):
        log = TrainLog(records=[{"iteration": 1, "total": 3.25, "lr": 1e-4}])
        path = tmp_path / "log" / "train_log.jsonl"
        log.save(path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0]) == log.records[0]
        assert TrainLog.load(path).records == log.records


class TestTrain:
    def test_artifacts_and_record_shape(self, manifest, tiny_config, tmp_path):
        cfg = tiny_config
        cfg.train.augment = False
        cfg.train.snapshot_every = 1
        result = train(cfg, manifest, tmp_path / "run", quiet=True)

        assert (tmp_path / "run" / "config.resolved").exists()
        assert (tmp_path / "run" / "train_log.jsonl").exists()
        assert result.final_checkpoint == tmp_path / "run" / "checkpoint_final.npz"
        assert result.final_checkpoint.exists()
        assert (tmp_path / "run" / "checkpoint_epoch001.npz").exists()

        # 6 samples, batch 2, no augmentation: 3 steps, then one epoch summary
        steps = result.log.iterations()
        assert len(steps) == 3
        summaries = [r for r in result.log.records if "epoch_summary" in r]
        assert len(summaries) == 1
        assert summaries[0]["seconds"] >= 0.0
        for record in steps:
            assert set(record) == {"iteration", "epoch", "lr", "total", *LOSS_KEYS}
            assert np.isfinite(record["total"])
            assert record["total"] == pytest.approx(
                sum(record[k] for k in LOSS_KEYS), rel=1e-5
            )

    def test_resolved_config_round_trips(self, manifest, tiny_config, tmp_path):
        cfg = tiny_config
        cfg.train.augment = False
        train(cfg, manifest, tmp_path / "run", quiet=True)
        assert load_config_file(tmp_path / "run" / "config.resolved") == cfg

    def test_augmentation_multiplies_items_by_eight(self, manifest, tiny_config, tmp_path):
        cfg = tiny_config
        cfg.train.augment = True
        cfg.train.batch_size = 8
        result = train(cfg, manifest, tmp_path / "run", quiet=True)
        # 6 samples x 8 dihedral variants = 48 items -> 6 batches of 8
        assert len(result.log.iterations()) == 6

    def test_log_reflects_lr_decay(self, manifest, tiny_config, tmp_path):
        cfg = tiny_config
        cfg.train.augment = False
        cfg.train.epochs = 2
        cfg.train.lr_decay_epoch = 1
        result = train(cfg, manifest, tmp_path / "run", quiet=True)
        by_epoch = {}
        for record in result.log.iterations():
            by_epoch.setdefault(record["epoch"], set()).add(record["lr"])
        assert by_epoch[1] == {cfg.train.initial_lr}
        assert by_epoch[2] == {cfg.train.initial_lr / cfg.train.lr_decay_factor}
        ckpt = load_checkpoint(tmp_path / "run" / "checkpoint_final.npz")
        assert ckpt.epoch == 2

    def test_same_seed_is_bit_reproducible(self, manifest, tiny_config, tmp_path):
        first = train(copy.deepcopy(tiny_config), manifest, tmp_path / "a", quiet=True)
        second = train(copy.deepcopy(tiny_config), manifest, tmp_path / "b", quiet=True)
        assert first.log.iterations() == second.log.iterations()
        for pa, pb in zip(first.net.parameters(), second.net.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seed_changes_the_run(self, manifest, tiny_config, tmp_path):
        first = train(copy.deepcopy(tiny_config), manifest, tmp_path / "a", quiet=True)
        other = copy.deepcopy(tiny_config)
        other.train.seed = 4
        second = train(other, manifest, tmp_path / "b", quiet=True)
        firsts = [r["total"] for r in first.log.iterations()]
        seconds = [r["total"] for r in second.log.iterations()]
        assert firsts != seconds

    def test_nonfinite_loss_raises_numeric_error(
        self, manifest, tiny_config, tmp_path, monkeypatch
    ):
        real = trainer_module.total_loss
        calls = {"n": 0}

        def poisoned(*args, **kwargs):
            bundle = real(*args, **kwargs)
            calls["n"] += 1
            if calls["n"] == 2:
                bundle.total = bundle.total * float("nan")
            return bundle

        monkeypatch.setattr(trainer_module, "total_loss", poisoned)
        cfg = tiny_config
        cfg.train.augment = False
        with pytest.raises(NumericError, match="iteration 2"):
            train(cfg, manifest, tmp_path / "run", quiet=True)

    def test_validates_config_before_running(self, manifest, tiny_config, tmp_path):
        cfg = tiny_config
        cfg.train.batch_size = 0
        with pytest.raises(ConfigurationError):
            train(cfg, manifest, tmp_path / "run", quiet=True)


def constant_encoder_archive(value=1e-3):
    weights = {}
    c_in = 3
    for b, (c_out, depth) in enumerate(zip(BLOCK_CHANNELS, BLOCK_DEPTHS), start=1):
        for c in range(1, depth + 1):
            weights[archive_key(b, c, "weight")] = np.full(
                (c_out, c_in, 3, 3), value, dtype=np.float32
            )
            weights[archive_key(b, c, "bias")] = np.zeros(c_out, dtype=np.float32)
            c_in = c_out
    return weights


class TestOverfitSmoke:
    def test_rejects_out_of_range_requests(self, manifest, tiny_config):
        with pytest.raises(ConfigurationError):
            overfit_smoke(tiny_config, manifest, n_images=0, iterations=2)
        with pytest.raises(ConfigurationError):
            overfit_smoke(tiny_config, manifest, n_images=9, iterations=2)
        with pytest.raises(ConfigurationError):
            overfit_smoke(tiny_config, manifest, n_images=7, iterations=2)  # only 6
        with pytest.raises(ConfigurationError):
            overfit_smoke(tiny_config, manifest, n_images=2, iterations=0)

    def test_short_run_shape(self, manifest, tiny_config):
        result = overfit_smoke(tiny_config, manifest, n_images=3, iterations=4)
        assert isinstance(result, SmokeResult)
        steps = result.log.iterations()
        assert len(steps) == 4
        assert all(np.isfinite(r["total"]) for r in steps)
        assert result.report.n_images == 3
        assert 0.0 <= result.report.f_max <= 1.0

    def test_bit_reproducible(self, manifest, tiny_config):
        a = overfit_smoke(copy.deepcopy(tiny_config), manifest, n_images=2, iterations=3)
        b = overfit_smoke(copy.deepcopy(tiny_config), manifest, n_images=2, iterations=3)
        assert a.log.records == b.log.records
        for pa, pb in zip(a.net.parameters(), b.net.parameters()):
            assert torch.equal(pa, pb)
        assert a.report.f_max == b.report.f_max
        assert a.report.mae == b.report.mae
        assert np.array_equal(a.report.precision, b.report.precision)

    def test_pretrained_weights_are_used(self, manifest, tiny_config):
        archive = constant_encoder_archive(1e-3)
        result = overfit_smoke(
            tiny_config, manifest, n_images=2, iterations=1, pretrained=archive
        )
        # one Adam step moves each coordinate by at most about the lr, so the
        # encoder must still sit near the archive values, far from random init
        w = result.net.encoder.blocks[4][2].weight.detach().numpy()
        assert np.allclose(w, 1e-3, atol=5e-4)

    def test_loss_goes_down_over_a_longer_run(self, manifest, tiny_config):
        result = overfit_smoke(tiny_config, manifest, n_images=2, iterations=12)
        steps = [r["total"] for r in result.log.iterations()]
        assert steps[-1] < steps[0]
