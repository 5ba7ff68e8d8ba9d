import math

import numpy as np
import pytest
import torch

from topicbench.encoders import EncoderConfig
from topicbench.models import (
    ClassicalTextClassifier,
    KeywordHead,
    LossWeights,
    ModelSpec,
    TopicHead,
    bce_loss,
    combined_loss,
    forward_keywords,
    forward_topic,
)


def zeroed(module):
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()
    return module


# ---------------------------------------------------------------------------
# Oracle helpers
# ---------------------------------------------------------------------------


def dense_head_oracle(head: TopicHead, summary: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass through the head's extracted parameters."""
    x = summary
    if not isinstance(head.trunk, torch.nn.Identity):
        w = head.trunk[0].weight.detach().numpy()
        b = head.trunk[0].bias.detach().numpy()
        x = np.maximum(x @ w.T + b, 0.0)
    w = head.projection.weight.detach().numpy()
    b = head.projection.bias.detach().numpy()
    return 1.0 / (1.0 + np.exp(-(x @ w.T + b)))


def bce_oracle(probs, targets, pos_weight=1.0, eps=1e-7):
    total = 0.0
    for p, y in zip(probs, targets):
        p = min(max(p, eps), 1.0 - eps)
        total += -(pos_weight * y * math.log(p) + (1 - y) * math.log1p(-p))
    return total / len(probs)


# ---------------------------------------------------------------------------
# forward_topic
# ---------------------------------------------------------------------------


def test_topic_head_zero_parameters_output_half():
    for hidden in (None, 16):
        head = zeroed(TopicHead(12, 5, hidden=hidden))
        probs = forward_topic(head, torch.randn(3, 12))
        assert torch.allclose(probs, torch.full((3, 5), 0.5))


def test_topic_head_flat_output_width():
    head = TopicHead(432, 83, hidden=72)
    assert forward_topic(head, torch.randn(2, 432)).shape == (2, 83)


def test_topic_head_dimension_mismatch():
    head = TopicHead(8, 3)
    with pytest.raises(ValueError):
        forward_topic(head, torch.randn(2, 9))


def test_topic_head_matches_dense_algebra_oracle():
    torch.manual_seed(0)
    for hidden in (None, 7):
        head = TopicHead(10, 4, hidden=hidden)
        summary = np.random.default_rng(1).normal(size=(6, 10))
        got = forward_topic(head, torch.tensor(summary, dtype=torch.float64).float())
        expected = dense_head_oracle(head, summary.astype(np.float32))
        assert np.allclose(got.detach().numpy(), expected, atol=1e-6)


# ---------------------------------------------------------------------------
# forward_keywords
# ---------------------------------------------------------------------------


def test_keyword_head_zero_parameters_output_half():
    head = zeroed(KeywordHead(9))
    probs = forward_keywords(head, torch.randn(100, 9))
    assert probs.shape == (100,)
    assert torch.allclose(probs, torch.full((100,), 0.5))


def test_keyword_head_matches_dense_oracle():
    torch.manual_seed(1)
    head = KeywordHead(6)
    vectors = np.random.default_rng(2).normal(size=(20, 6)).astype(np.float32)
    got = forward_keywords(head, torch.from_numpy(vectors))
    w = head.projection.weight.detach().numpy()
    b = head.projection.bias.detach().numpy()
    expected = 1.0 / (1.0 + np.exp(-(vectors @ w.T + b))).reshape(-1)
    assert np.allclose(got.detach().numpy(), expected, atol=1e-6)


def test_keyword_head_rejects_empty():
    with pytest.raises(ValueError):
        forward_keywords(KeywordHead(4), torch.zeros(0, 4))


# ---------------------------------------------------------------------------
# bce_loss
# ---------------------------------------------------------------------------


def test_bce_perfect_predictions_near_zero():
    targets = torch.tensor([0.0, 1.0, 1.0, 0.0])
    loss = bce_loss(targets.clone(), targets)
    assert loss.item() < 1e-5


def test_bce_pos_weight_one_is_unweighted():
    gen = torch.Generator().manual_seed(3)
    probs = torch.rand(50, generator=gen)
    targets = (torch.rand(50, generator=gen) < 0.5).float()
    assert torch.equal(bce_loss(probs, targets, 1.0), bce_loss(probs, targets))


def test_bce_matches_summation_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        probs = rng.random(n)
        targets = rng.integers(0, 2, size=n).astype(float)
        weight = float(rng.choice([1, 3, 5, 10]))
        got = bce_loss(
            torch.tensor(probs, dtype=torch.float64),
            torch.tensor(targets, dtype=torch.float64),
            weight,
        )
        assert got.item() == pytest.approx(bce_oracle(probs, targets, weight), abs=1e-9)


def test_bce_strictly_increases_with_pos_weight():
    probs = torch.tensor([0.7, 0.2, 0.9])
    targets = torch.tensor([1.0, 0.0, 1.0])
    losses = [bce_loss(probs, targets, w).item() for w in (1, 3, 5, 10, 40)]
    assert all(b > a for a, b in zip(losses, losses[1:]))


def test_bce_length_mismatch():
    with pytest.raises(ValueError):
        bce_loss(torch.rand(3), torch.rand(4))


# ---------------------------------------------------------------------------
# combined_loss
# ---------------------------------------------------------------------------


def test_combined_loss_default_setting_is_sum():
    assert combined_loss(0.75, 1.25, LossWeights(1.0, 1.0)) == pytest.approx(2.0)


def test_combined_loss_beta_zero_is_topic_loss():
    assert combined_loss(0.5, 123.0, LossWeights(1.0, 0.0)) == 0.5


def test_combined_loss_matches_arithmetic_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        l1, l2 = rng.random(2) * 10
        alpha, beta = rng.random(2) + 0.01
        got = combined_loss(float(l1), float(l2), LossWeights(alpha, beta))
        assert got == pytest.approx(alpha * l1 + beta * l2, abs=1e-12)


def test_combined_loss_rejects_non_finite():
    with pytest.raises(ValueError):
        combined_loss(float("nan"), 1.0, LossWeights())
    with pytest.raises(ValueError):
        combined_loss(1.0, float("inf"), LossWeights())


def test_loss_weights_validation():
    with pytest.raises(ValueError):
        LossWeights(0.0, 0.0)
    with pytest.raises(ValueError):
        LossWeights(-1.0, 1.0)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------


def _head_loss(head, summary, targets):
    return bce_loss(forward_topic(head, summary), targets)


def _kink_free_summary(head, margin=0.05):
    # finite differences need a neighborhood clear of the ReLU kink
    for _ in range(1000):
        summary = torch.randn(4, 6, dtype=torch.float64)
        linear = head.trunk[0]
        with torch.no_grad():
            pre = summary @ linear.weight.T + linear.bias
        if pre.abs().min().item() > margin:
            return summary
    raise AssertionError("no kink-free check point found")


def test_head_gradients_match_central_finite_differences():
    torch.manual_seed(11)
    head = TopicHead(6, 3, hidden=5).double()
    summary = _kink_free_summary(head)
    targets = (torch.rand(4, 3) < 0.5).double()

    loss = _head_loss(head, summary, targets)
    analytic = torch.autograd.grad(loss, list(head.parameters()))

    step = 1e-3
    for param, grad in zip(head.parameters(), analytic):
        fd = torch.zeros_like(param)
        flat = param.data.view(-1)
        fd_flat = fd.view(-1)
        for i in range(flat.numel()):
            original = flat[i].item()
            flat[i] = original + step
            up = _head_loss(head, summary, targets).item()
            flat[i] = original - step
            down = _head_loss(head, summary, targets).item()
            flat[i] = original
            fd_flat[i] = (up - down) / (2 * step)
        rel = (grad - fd).norm() / max(grad.norm().item(), fd.norm().item(), 1e-12)
        assert rel.item() < 1e-4


def _tiny_multitask_net(multitask=True):
    torch.manual_seed(21)
    spec = ModelSpec(
        encoder=EncoderConfig(family="recurrent", embedding_dim=8, hidden_size=4),
        n_outputs=3,
        head_hidden=5,
        multitask=multitask,
        vocab_size=30,
        max_len=16,
    )
    return spec.build()


def _multitask_losses(net):
    tokens = torch.randint(1, 30, (4, 10), generator=torch.Generator().manual_seed(2))
    mask = torch.ones(4, 10, dtype=torch.bool)
    topic_probs, keyword_probs = net(tokens, mask)
    gold_topics = (torch.rand(4, 3, generator=torch.Generator().manual_seed(3)) < 0.5).float()
    gold_keywords = (torch.rand(4, 10, generator=torch.Generator().manual_seed(4)) < 0.3).float()
    l1 = bce_loss(topic_probs, gold_topics)
    l2 = bce_loss(keyword_probs, gold_keywords)
    return l1, l2


def test_multitask_gradient_partition():
    net = _tiny_multitask_net()
    l1, l2 = _multitask_losses(net)

    topic_params = list(net.topic_head.parameters())
    keyword_params = list(net.keyword_head.parameters())
    shared_params = list(net.encoder.parameters()) + [net.embedding.weight]

    from_l1 = torch.autograd.grad(l1, keyword_params, retain_graph=True, allow_unused=True)
    assert all(g is None or torch.all(g == 0) for g in from_l1)

    from_l2 = torch.autograd.grad(l2, topic_params, retain_graph=True, allow_unused=True)
    assert all(g is None or torch.all(g == 0) for g in from_l2)

    shared_l1 = torch.autograd.grad(l1, shared_params, retain_graph=True, allow_unused=True)
    shared_l2 = torch.autograd.grad(l2, shared_params, retain_graph=True, allow_unused=True)
    assert any(g is not None and g.abs().sum() > 0 for g in shared_l1)
    assert any(g is not None and g.abs().sum() > 0 for g in shared_l2)


def test_beta_zero_keyword_head_gradient_exactly_zero():
    net = _tiny_multitask_net()
    l1, l2 = _multitask_losses(net)
    total = combined_loss(l1, l2, LossWeights(1.0, 0.0))
    grads = torch.autograd.grad(total, list(net.keyword_head.parameters()), allow_unused=True)
    for g in grads:
        assert g is None or torch.all(g == 0.0)


def test_networks_share_initialization_up_to_keyword_head():
    single = _tiny_multitask_net(multitask=False)
    multi = _tiny_multitask_net(multitask=True)
    for (name_a, a), (name_b, b) in zip(
        single.named_parameters(), multi.named_parameters()
    ):
        if name_a.startswith(("embedding", "encoder", "topic_head")):
            assert name_a == name_b
            assert torch.equal(a, b)


def test_model_spec_json_round_trip():
    spec = ModelSpec(
        encoder=EncoderConfig(family="convolutional"),
        n_outputs=12,
        head_hidden=None,
        multitask=True,
        vocab_size=100,
        max_len=115,
    )
    assert ModelSpec.from_json(spec.to_json()) == spec


def test_classical_classifier_forward_shapes():
    net = _tiny_multitask_net()
    tokens = torch.randint(1, 30, (5, 12))
    mask = torch.ones(5, 12, dtype=torch.bool)
    topic_probs, keyword_probs = net(tokens, mask)
    assert topic_probs.shape == (5, 3)
    assert keyword_probs.shape == (5, 12)
    assert ((topic_probs > 0) & (topic_probs < 1)).all()


def test_pretrained_classifier_uses_adapter(stub_adapter):
    spec = ModelSpec(n_outputs=4, multitask=True, encoder=EncoderConfig(family="pretrained", adapter_dim=32))
    net = spec.build_pretrained(stub_adapter)
    ids, _ = stub_adapter.tokenize_words(["alpha", "beta"])
    tokens = torch.tensor([ids])
    mask = torch.ones_like(tokens, dtype=torch.bool)
    topic_probs, keyword_probs = net(tokens, mask)
    assert topic_probs.shape == (1, 4)
    assert keyword_probs.shape == (1, len(ids))
