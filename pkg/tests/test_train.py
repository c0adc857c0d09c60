import numpy as np
import pytest

from denoiseclf.data import PairedExample
from denoiseclf.denoise import DenoiseConfig
from denoiseclf.encoder import EncoderConfig
from denoiseclf.metrics import DataError
from denoiseclf.model import ModelConfig, TextClassifier
from denoiseclf.tokenizer import build_vocab
from denoiseclf.train import (TrainConfig, cache_embeddings, evaluate,
                              train_phase1, train_phase2, warmup_linear)

PAIRS = [
    PairedExample(0, "good nite", "good night"),
    PairedExample(0, "sweet dreamz", "sweet dreams"),
    PairedExample(0, "happy fun day", "happy fun day"),
    PairedExample(1, "bad day", "bad day"),
    PairedExample(1, "awful trouble", "awful trouble"),
    PairedExample(1, "hard work pain", "hard work pain"),
]


def tiny_model(mode="stacked", seed=0):
    sentences = [ex.incomplete for ex in PAIRS] + \
        [ex.complete for ex in PAIRS]
    vocab = build_vocab(sentences)
    cfg = ModelConfig(
        encoder=EncoderConfig(hidden_size=8, seq_len=6, num_layers=1,
                              num_heads=2, ff_size=12,
                              vocab_size=len(vocab) + 4, num_classes=2),
        denoise=DenoiseConfig(dims=(8, 6, 4, 2)),
        n_post=1,
        mode=mode,
    )
    return TextClassifier(cfg, vocab, seed=seed)


class TestSchedule:
    def test_boundary_values(self):
        total = 100  # warmup ends at step 10
        assert warmup_linear(0, total, 0.1) == 0.0
        assert warmup_linear(10, total, 0.1) == 1.0
        assert warmup_linear(5, total, 0.1) == pytest.approx(0.5)
        assert warmup_linear(55, total, 0.1) == pytest.approx(0.5)
        assert warmup_linear(100, total, 0.1) == 0.0

    def test_single_peak_and_continuity(self):
        total = 37
        values = [warmup_linear(s, total, 0.1) for s in range(total + 1)]
        peak = values.index(max(values))
        assert all(b >= a for a, b in zip(values[:peak], values[1:peak + 1]))
        assert all(b <= a for a, b in zip(values[peak:], values[peak + 1:]))
        assert max(values) == 1.0
        # warmup spans ceil(3.7) = 4 steps, so increments are exactly 1/4
        assert all(abs(b - a) <= 0.25 + 1e-12
                   for a, b in zip(values, values[1:]))

    def test_warmup_rounds_up(self):
        # ceil(0.1 * 7) = 1: full factor from the first step
        assert warmup_linear(1, 7, 0.1) == 1.0

    def test_all_warmup(self):
        assert warmup_linear(5, 10, 1.0) == 0.5
        assert warmup_linear(10, 10, 1.0) == 1.0


class TestPhase1:
    def test_loss_curve_decreases(self):
        model = tiny_model()
        cfg = TrainConfig(phase1_epochs=40, phase1_lr=5e-3, batch_size=3,
                          seed=0)
        curve = train_phase1(PAIRS, model, cfg)
        assert len(curve) == 40
        assert curve[-1] < 0.5 * curve[0]

    def test_only_denoise_parameters_move(self):
        model = tiny_model()
        before = {name: p.values.copy()
                  for name, p in model.named_parameters()}
        cfg = TrainConfig(phase1_epochs=3, phase1_lr=1e-2, batch_size=3)
        train_phase1(PAIRS, model, cfg)
        for name, p in model.named_parameters():
            if name.startswith("stack."):
                assert not np.array_equal(p.values, before[name]), name
            else:
                np.testing.assert_array_equal(p.values, before[name])

    def test_zero_lr_is_inert(self):
        model = tiny_model()
        before = {name: p.values.copy()
                  for name, p in model.named_parameters()}
        cfg = TrainConfig(phase1_epochs=2, phase1_lr=0.0, batch_size=3)
        curve = train_phase1(PAIRS, model, cfg)
        assert curve[0] == pytest.approx(curve[1])
        for name, p in model.named_parameters():
            np.testing.assert_array_equal(p.values, before[name])

    def test_requires_paired_data(self):
        model = tiny_model()
        broken = [PairedExample(0, "good nite", None)]
        with pytest.raises(DataError):
            train_phase1(broken, model, TrainConfig())
        with pytest.raises(DataError):
            train_phase1([], model, TrainConfig())

    def test_determinism(self):
        curves = []
        for _ in range(2):
            model = tiny_model(seed=2)
            cfg = TrainConfig(phase1_epochs=5, phase1_lr=1e-3, batch_size=2,
                              seed=3)
            curves.append(train_phase1(PAIRS, model, cfg))
        assert curves[0] == curves[1]

    def test_cached_embeddings_are_detached(self):
        model = tiny_model()
        cached = cache_embeddings(PAIRS[:2], model)
        for h_inc, h_comp in cached:
            assert not h_inc._parents and not h_comp._parents

    def test_log_callback_schema(self):
        model = tiny_model()
        records = []
        cfg = TrainConfig(phase1_epochs=2, phase1_lr=1e-3, batch_size=3)
        train_phase1(PAIRS, model, cfg, log=records.append)
        assert [r["epoch"] for r in records] == [0, 1]
        assert all(r["phase"] == 1 and "loss" in r and "lr" in r
                   for r in records)


class TestPhase2:
    def test_loss_decreases_and_fits_training_set(self):
        model = tiny_model()
        cfg = TrainConfig(phase1_epochs=20, phase1_lr=5e-3,
                          phase2_epochs=60, phase2_lr=5e-3, batch_size=3,
                          seed=1)
        train_phase1(PAIRS, model, cfg)
        history = train_phase2(PAIRS, model, cfg)
        assert len(history) == 60
        assert history[-1]["loss"] < history[0]["loss"]
        cm = evaluate(PAIRS, model)
        assert np.trace(cm.counts) >= 5  # fits 6 training sentences

    def test_baseline_mode_keeps_denoise_frozen(self):
        model = tiny_model(mode="baseline")
        before = {name: p.values.copy()
                  for name, p in model.named_parameters()}
        cfg = TrainConfig(phase2_epochs=2, phase2_lr=1e-3, batch_size=3)
        train_phase2(PAIRS, model, cfg)
        stack_or_post = [n for n in before
                         if n.startswith(("stack.", "post."))]
        for name in stack_or_post:
            np.testing.assert_array_equal(
                dict(model.named_parameters())[name].values, before[name])
        assert not np.array_equal(
            dict(model.named_parameters())["head.w"].values,
            before["head.w"])

    def test_aux_mse_changes_trajectory(self):
        histories = []
        for weight in (0.0, 1.0):
            model = tiny_model(seed=5)
            cfg = TrainConfig(phase2_epochs=3, phase2_lr=1e-3, batch_size=3,
                              seed=5, aux_mse_weight=weight)
            histories.append(train_phase2(PAIRS, model, cfg))
        assert histories[0][-1]["loss"] != histories[1][-1]["loss"]

    def test_include_complete_phase2_grows_corpus(self):
        model = tiny_model(seed=6)
        cfg = TrainConfig(phase2_epochs=1, phase2_lr=1e-3, batch_size=4,
                          include_complete_phase2=True)
        # 6 incomplete + 6 complete examples = 12 -> 3 batches of 4
        steps = []
        train_phase2(PAIRS, model, cfg, log=steps.append)
        assert steps[-1]["lr"] == pytest.approx(
            1e-3 * warmup_linear(3, 3, cfg.warmup_proportion))

    def test_empty_corpus_rejected(self):
        with pytest.raises(DataError):
            train_phase2([], tiny_model(), TrainConfig())

    def test_determinism(self):
        losses = []
        for _ in range(2):
            model = tiny_model(seed=7)
            cfg = TrainConfig(phase2_epochs=3, phase2_lr=1e-3, batch_size=2,
                              seed=8)
            losses.append([h["loss"] for h in train_phase2(PAIRS, model, cfg)])
        assert losses[0] == losses[1]


class TestEvaluate:
    def test_counts_sum_to_corpus_size(self):
        model = tiny_model()
        cm = evaluate(PAIRS, model)
        assert cm.counts.sum() == len(PAIRS)

    def test_empty_test_set(self):
        with pytest.raises(DataError):
            evaluate([], tiny_model())

    def test_never_reads_complete_column(self):
        model = tiny_model()
        with_complete = evaluate(PAIRS, model)
        stripped = [PairedExample(ex.label, ex.incomplete, None)
                    for ex in PAIRS]
        without = evaluate(stripped, model)
        np.testing.assert_array_equal(with_complete.counts, without.counts)
