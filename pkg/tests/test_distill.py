import json

import numpy as np
import pytest

from streamedit.autodiff import EMA, Tensor, no_grad
from streamedit.distill import (
    DistillConfig,
    DivergenceError,
    DMDTrainer,
    ScorePair,
    TrainingLog,
    critic_ratio,
    critic_times,
    dmd_generator_loss,
    read_log,
    self_forcing_rollout,
    student_sample,
)
from streamedit.distill.toys import TOY_EDITOR_CONFIG, TOY_INSTRUCTION, ChunkedARProcess, Mixture1D
from streamedit.editor import EditorTransformer
from streamedit.flow import TEACHER_CONFIG, NFECounter, euler_sample
from streamedit.toyflow import VelocityMLP


def mlp(seed=0):
    return VelocityMLP(1, hidden=16, n_layers=2, rng=np.random.default_rng(seed))


def toy_editor(seed=0, **overrides):
    from dataclasses import replace

    return EditorTransformer(replace(TOY_EDITOR_CONFIG, **overrides), seed=seed)


def toy_condition(model, n_chunks=7, batch=2, seed=0):
    proc = ChunkedARProcess(n_chunks=n_chunks)
    src, tgt = proc.sample(batch, np.random.default_rng(seed))
    return model.condition(src, TOY_INSTRUCTION), tgt


# ------------------------------------------------------------------ NFE accounting


def test_student_sample_uses_exactly_four_calls():
    counter = NFECounter(mlp())
    out = student_sample(counter, np.zeros((5, 1), np.float32), steps=4)
    assert counter.count == 4 and out.shape == (5, 1)


def test_single_step_student_shape():
    assert student_sample(mlp(), np.zeros((3, 1), np.float32), steps=1).shape == (3, 1)


def test_teacher_profile_reads_80_under_same_counter():
    teacher = NFECounter(VelocityMLP(1, hidden=8, n_layers=1, n_classes=2))
    euler_sample(teacher, np.zeros((2, 1), np.float32), TEACHER_CONFIG, condition=np.array([0, 1]),
                 null_condition=np.array([-1, -1]))
    assert teacher.count == 80


# ------------------------------------------------------------------ DMD mechanics


def test_generator_gradient_vanishes_when_scores_agree():
    real = mlp(1)
    student = mlp(2)
    pair = ScorePair(real, real.clone())
    x = student_sample(student, Tensor(np.random.default_rng(0).standard_normal((32, 1)).astype(np.float32)))
    loss, gap = dmd_generator_loss(x, pair, None, np.random.default_rng(1), steps=4)
    loss.backward()
    assert gap == 0.0
    assert all(np.all(p.grad == 0) for p in student.parameters())


def test_generator_gradient_points_along_score_gap():
    x = Tensor(np.zeros((4, 1)), requires_grad=True)
    real = lambda xt, t, c: Tensor(np.zeros_like(xt.data))  # noqa: E731
    fake = lambda xt, t, c: Tensor(np.ones_like(xt.data))  # noqa: E731
    loss, _ = dmd_generator_loss(x, ScorePair(real, fake), None, np.random.default_rng(0), steps=4,
                                 t=np.full(4, 0.5), noise=np.zeros((4, 1)))
    loss.backward()
    # x1_fake - x1_real = (1 - t) * (1 - 0) = 0.5; the step x -= lr * grad moves toward the real score
    assert np.all(x.grad > 0)


def test_critic_times_on_interior_grid():
    t = critic_times(4, 1000, np.random.default_rng(0))
    assert set(np.unique(t)) == {0.25, 0.5, 0.75}


def test_nonfinite_loss_aborts_with_diagnostics():
    class Broken(VelocityMLP):
        def forward(self, x, t, cond=None):
            return super().forward(x, t, cond) * np.nan

    cfg = DistillConfig(lr_multiplier=100, batch_size=4)
    trainer = DMDTrainer(mlp(), ScorePair(mlp(1), Broken(1, 16, 2)), cfg,
                         sample_batch=lambda r: (r.standard_normal((4, 1)).astype(np.float32), None))
    with pytest.raises(DivergenceError) as err:
        trainer.step()
    assert err.value.record["phase"] == "critic"
    assert trainer.log.of_kind("diverged")


def test_log_records_critic_ratio_and_nfe(tmp_path):
    cfg = DistillConfig(lr_multiplier=100, batch_size=8, critic_steps_per_gen=5)
    log = TrainingLog(tmp_path / "log.jsonl")
    DMDTrainer(mlp(), ScorePair(mlp(1), mlp(1)), cfg, log=log,
               sample_batch=lambda r: (r.standard_normal((8, 1)).astype(np.float32), None)).fit(3)
    records = read_log(tmp_path / "log.jsonl")
    assert critic_ratio(records) == 5
    gen = [r for r in records if r["kind"] == "generator"]
    assert [r["nfe"] for r in gen] == [4, 4, 4]
    assert json.loads((tmp_path / "log.jsonl").read_text().splitlines()[0])["kind"] == "critic"


def test_training_is_deterministic():
    def run():
        cfg = DistillConfig(lr_multiplier=100, batch_size=8, seed=3)
        tr = DMDTrainer(mlp(), ScorePair(mlp(1), mlp(1)), cfg,
                        sample_batch=lambda r: (r.standard_normal((8, 1)).astype(np.float32), None)).fit(3)
        return tr.student.state_dict()

    a, b = run(), run()
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_ema_with_zero_decay_tracks_parameters():
    model = mlp()
    ema = EMA(model, 0.0)
    for p in model.parameters():
        p.data = p.data + 1.0
    ema.update(model)
    assert all(np.array_equal(s.data, p.data) for s, p in zip(ema.shadow.parameters(), model.parameters()))


@pytest.mark.parametrize("kwargs", [{"student_steps": 0}, {"ema_decay": 1.0}, {"lr_gen": 0},
                                    {"student_steps": 50, "teacher_steps": 40}])
def test_distill_config_validation(kwargs):
    with pytest.raises(ValueError):
        DistillConfig(**kwargs)


def test_mixture_moments():
    mix = Mixture1D()
    assert mix.mean == 3.0 and mix.var == pytest.approx(2.5)


# ------------------------------------------------------------------ rollout


def test_rollout_length_and_nfe_per_chunk():
    model = toy_editor()
    cond, _ = toy_condition(model)
    video, records = self_forcing_rollout(model, cond, 7, steps=4, seed=0)
    assert video.shape[1] == 21
    assert [r.nfe for r in records] == [4] * 7
    assert records[6].visible == [2, 3, 4, 5]


def test_single_chunk_rollout_equals_student_sample_bitwise():
    model = toy_editor()
    cond, _ = toy_condition(model, n_chunks=1)
    noise = np.random.default_rng(4).standard_normal(cond.src.shape).astype(np.float32)
    video, _ = self_forcing_rollout(model, cond, 1, steps=4, noise=noise)
    with no_grad():
        reference = student_sample(model, noise, cond, steps=4)
    assert np.array_equal(video, reference)


def test_last_chunk_masks_first_chunk_when_in_window():
    model = toy_editor(window_chunks=7)
    cond, _ = toy_condition(model)
    _, records = self_forcing_rollout(model, cond, 7, steps=2, mask_first_for_last=True)
    assert records[6].excluded == (0,) and records[6].visible == [1, 2, 3, 4, 5]
    assert records[5].visible == [0, 1, 2, 3, 4]


def test_exposure_bias_witness():
    model = toy_editor()
    cond, tgt = toy_condition(model)
    own, _ = self_forcing_rollout(model, cond, 7, steps=4, seed=1)
    forced, _ = self_forcing_rollout(model, cond, 7, steps=4, seed=1, context=tgt)
    assert np.array_equal(own[:, :3], forced[:, :3])
    for k in range(1, 7):
        assert not np.allclose(own[:, 3 * k:3 * k + 3], forced[:, 3 * k:3 * k + 3])


def test_rollout_is_differentiable_within_chunks():
    model = toy_editor()
    cond, _ = toy_condition(model, batch=1)
    video, _ = self_forcing_rollout(model, cond, 7, steps=2, grad=True)
    video.sum().backward()
    assert any(np.any(p.grad != 0) for p in model.parameters())


def test_rollout_rejects_wrong_length():
    model = toy_editor()
    cond, _ = toy_condition(model, n_chunks=2)
    with pytest.raises(ValueError):
        self_forcing_rollout(model, cond, 3)
