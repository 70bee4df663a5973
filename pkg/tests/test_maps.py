import numpy as np
import pytest

from lateral_inhibition.maps import StaticMap, central_difference


def test_then_applies_chain_rule():
    f = StaticMap(lambda x: x**2, lambda x: 2 * x, "sq")
    g = StaticMap(np.sin, np.cos, "sin")
    h = f.then(g)
    x = np.array([0.1, 0.7, 1.3])
    assert np.allclose(h(x), np.sin(x**2))
    assert np.allclose(h.derivative(x), np.cos(x**2) * 2 * x, rtol=1e-14)


def test_central_difference_is_accurate():
    x = np.geomspace(1e-3, 10, 7)
    assert np.allclose(central_difference(np.exp, x), np.exp(x), rtol=1e-9)
