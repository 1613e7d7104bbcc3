"""
数值计算基础
参数存储、softmax、自注意力池化、交叉熵、SGD 与有限差分梯度检查

所有计算使用 float64。梯度为手工推导，不依赖自动微分。
"""

import json
import logging
import math
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import softmax as _scipy_softmax

from app.core.exceptions import DimensionMismatchError, ForgeError, NonFiniteError

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class ParamStore:
    """命名参数张量 + 对应梯度，可由种子复现初始化"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.velocity: Dict[str, np.ndarray] = {}
        self._rng = np.random.default_rng(seed)

    def add(self, name: str, shape: Tuple[int, ...], init: str = "uniform") -> np.ndarray:
        """
        注册参数

        uniform: U(-r, r)，r = sqrt(6 / (fan_in + fan_out))；一维参数 fan_out 记为 1
        zeros: 全零
        """
        if name in self.params:
            raise ForgeError(f"参数重复注册: {name}")
        shape = tuple(int(s) for s in shape)
        if init == "zeros":
            value = np.zeros(shape, dtype=np.float64)
        elif init == "uniform":
            fan_in = shape[-1]
            fan_out = shape[0] if len(shape) > 1 else 1
            r = math.sqrt(6.0 / (fan_in + fan_out))
            value = self._rng.uniform(-r, r, size=shape)
        else:
            raise ForgeError(f"未知的初始化方式: {init}")
        self.params[name] = value
        self.grads[name] = np.zeros(shape, dtype=np.float64)
        return value

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def names(self) -> List[str]:
        return list(self.params.keys())

    def size(self) -> int:
        return sum(p.size for p in self.params.values())

    def zero_grad(self) -> None:
        for grad in self.grads.values():
            grad.fill(0.0)

    def shapes(self) -> Dict[str, List[int]]:
        return {name: list(value.shape) for name, value in self.params.items()}

    def to_dict(self) -> Dict[str, Dict]:
        return {
            name: {"shape": list(value.shape), "data": value.ravel().tolist()}
            for name, value in self.params.items()
        }

    def to_json(self, meta: Optional[Dict] = None) -> str:
        """序列化为 JSON（float repr 可无损往返）"""
        return json.dumps({"meta": meta or {}, "params": self.to_dict()}, sort_keys=False)

    @classmethod
    def from_dict(cls, payload: Dict[str, Dict], expected_shapes: Optional[Dict[str, List[int]]] = None) -> "ParamStore":
        store = cls()
        for name, tensor in payload.items():
            shape = tuple(tensor["shape"])
            data = np.asarray(tensor["data"], dtype=np.float64)
            if data.size != int(np.prod(shape)):
                raise DimensionMismatchError(f"{name}: 数据长度 {data.size} 与形状 {shape} 不符")
            if not np.all(np.isfinite(data)):
                raise NonFiniteError(f"{name}: 包含非有限值")
            store.params[name] = data.reshape(shape)
            store.grads[name] = np.zeros(shape, dtype=np.float64)

        if expected_shapes is not None:
            if set(expected_shapes) != set(store.params):
                missing = sorted(set(expected_shapes) - set(store.params))
                extra = sorted(set(store.params) - set(expected_shapes))
                raise DimensionMismatchError(f"参数集合不匹配: 缺少 {missing}, 多余 {extra}")
            for name, shape in expected_shapes.items():
                if list(store.params[name].shape) != list(shape):
                    raise DimensionMismatchError(
                        f"{name}: 形状 {list(store.params[name].shape)} != 期望 {list(shape)}"
                    )
        return store

    @classmethod
    def from_json(cls, text: str, expected_shapes: Optional[Dict[str, List[int]]] = None) -> Tuple["ParamStore", Dict]:
        payload = json.loads(text)
        return cls.from_dict(payload["params"], expected_shapes), payload.get("meta", {})


class AttentionResult(NamedTuple):
    context: np.ndarray
    weights: np.ndarray
    argmax: int


def softmax(logits: np.ndarray) -> np.ndarray:
    """数值稳定的 softmax（内部减去最大值）"""
    return _scipy_softmax(np.asarray(logits, dtype=np.float64), axis=-1)


def attention_pool(V: np.ndarray, y: np.ndarray) -> AttentionResult:
    """
    自注意力池化

    weights = softmax(V y)，context = weights V，argmax 为权重最大的 token
    """
    V = np.asarray(V, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < 1:
        raise DimensionMismatchError(f"V 必须是非空矩阵，实际形状 {V.shape}")
    if V.shape[1] != y.shape[0]:
        raise DimensionMismatchError(f"V 列数 {V.shape[1]} != 注意力向量长度 {y.shape[0]}")
    weights = softmax(V @ y)
    return AttentionResult(context=weights @ V, weights=weights, argmax=int(np.argmax(weights)))


def attention_pool_backward(V: np.ndarray, weights: np.ndarray, d_context: np.ndarray) -> np.ndarray:
    """给定 dL/dcontext，返回 dL/dy"""
    d_weights = V @ d_context
    d_scores = weights * (d_weights - weights @ d_weights)
    return V.T @ d_scores


def cross_entropy(pred: np.ndarray, gold_class: int) -> float:
    """-ln(pred[gold])，概率下限 1e-12"""
    if not 0 <= gold_class < len(pred):
        raise ForgeError(f"类别序号越界: {gold_class} (共 {len(pred)} 类)")
    return -math.log(max(float(pred[gold_class]), PROB_FLOOR))


def softmax_xent_grad(pred: np.ndarray, gold_class: int) -> np.ndarray:
    """softmax + 交叉熵对 logits 的梯度"""
    grad = np.array(pred, dtype=np.float64)
    grad[gold_class] -= 1.0
    return grad


def entropy(dist: Iterable[float]) -> float:
    """自然对数熵，0·ln0 = 0"""
    p = np.asarray(list(dist), dtype=np.float64)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) if nz.size else 0.0


def sgd_step(params: ParamStore, learning_rate: float, momentum: float = 0.0) -> None:
    """
    p <- p - lr * v，v = momentum * v + g；更新后梯度清零

    任一更新出现非有限值时不修改任何参数并抛出 NonFiniteError
    """
    updates: Dict[str, np.ndarray] = {}
    for name, grad in params.grads.items():
        if momentum:
            velocity = params.velocity.get(name)
            velocity = grad.copy() if velocity is None else momentum * velocity + grad
            params.velocity[name] = velocity
            step = learning_rate * velocity
        else:
            step = learning_rate * grad
        if not np.all(np.isfinite(step)):
            raise NonFiniteError(f"参数 {name} 的更新包含非有限值")
        updates[name] = step

    for name, step in updates.items():
        params.params[name] -= step
    params.zero_grad()


def grad_check(
    loss_fn: Callable[[], float],
    params: ParamStore,
    epsilon: float = 1e-5,
    max_coords: int = 64,
    seed: int = 0,
) -> float:
    """
    中心差分梯度检查

    loss_fn 计算损失并把梯度累加进 params.grads。
    检查全部坐标（不超过 max_coords 时）或随机抽取 max_coords 个坐标，
    返回最大相对误差 |a - n| / max(1, |a| + |n|)。
    """
    params.zero_grad()
    loss = loss_fn()
    if not math.isfinite(loss):
        raise NonFiniteError(f"损失非有限: {loss}")
    analytic = {name: grad.copy() for name, grad in params.grads.items()}

    coords = [(name, i) for name in params.names() for i in range(params[name].size)]
    if len(coords) > max_coords:
        rng = np.random.default_rng(seed)
        picked = sorted(rng.choice(len(coords), size=max_coords, replace=False))
        coords = [coords[i] for i in picked]

    worst = 0.0
    for name, i in coords:
        flat = params[name].reshape(-1)
        original = flat[i]

        flat[i] = original + epsilon
        params.zero_grad()
        loss_plus = loss_fn()
        flat[i] = original - epsilon
        params.zero_grad()
        loss_minus = loss_fn()
        flat[i] = original

        if not (math.isfinite(loss_plus) and math.isfinite(loss_minus)):
            raise NonFiniteError(f"{name}[{i}]: 扰动后损失非有限")
        numeric = (loss_plus - loss_minus) / (2.0 * epsilon)
        a = float(analytic[name].reshape(-1)[i])
        error = abs(a - numeric) / max(1.0, abs(a) + abs(numeric))
        worst = max(worst, error)

    params.zero_grad()
    logger.debug(f"梯度检查: {len(coords)} 个坐标, 最大相对误差 {worst:.3e}")
    return worst
