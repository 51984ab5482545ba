import itertools

import numpy as np
import pytest

from neuralmip.milp import fix_variables, make_problem, reference_lp
from neuralmip.milp.problem import Assignment
from neuralmip.power import GeneratorParams, Line, LoadScenario, SystemSpec, make_instance
from neuralmip.power.ucmodel import build_uc_milp


def tiny_system() -> SystemSpec:
    """Three buses in a triangle, a cheap base unit and a fast peaker."""
    lines = (
        Line(0, 1, 2, 0.1, 10.0, 80.0, -80.0),
        Line(1, 2, 3, 0.1, 10.0, 80.0, -80.0),
        Line(2, 1, 3, 0.1, 10.0, 80.0, -80.0),
    )
    gens = (
        GeneratorParams(id=0, bus=1, p_min=20.0, p_max=100.0, su=60.0, sd=60.0, ut=2, dt=2,
                        ru=50.0, rd=50.0, cu=(100.0, 200.0), nd=(1, 3),
                        pb=(20.0, 60.0, 100.0), cb=(300.0, 700.0, 1200.0), nl=2,
                        v0=1, p0=50.0, init_state_periods=3),
        GeneratorParams(id=1, bus=2, p_min=10.0, p_max=60.0, su=40.0, sd=40.0, ut=1, dt=1,
                        ru=40.0, rd=40.0, cu=(50.0,), nd=(1,),
                        pb=(10.0, 60.0), cb=(200.0, 800.0), nl=1,
                        v0=0, p0=0.0, init_state_periods=2),
    )
    return SystemSpec(buses=(1, 2, 3), lines=lines, generators=gens, slack_bus=3,
                      bus_weights=(0.3, 0.3, 0.4))


def tiny_instance(loads=(60.0, 95.0, 120.0, 70.0), reserve=0.05):
    system = tiny_system()
    d = np.outer(np.array(system.bus_weights), np.asarray(loads, dtype=float))
    return make_instance(system, LoadScenario(d, reserve * d.sum(axis=0)), name="tiny")


def enumerate_uc(instance):
    """Exhaustive optimum of a small UC MILP.

    Every binary solution is determined by its on/off pattern u (x = u_{t-1} u_t,
    s = u_t (1 - u_{t-1}), z = u_{t-1} (1 - u_t)), so enumerating the 2^(G T)
    patterns and solving the remaining LP with HiGHS covers every assignment.
    """
    problem, vmap = build_uc_milp(instance)
    G, T = vmap.n_gens, vmap.horizon
    best, best_x = np.inf, None
    for bits in itertools.product((0, 1), repeat=G * T):
        u = np.array(bits).reshape(G, T)
        pairs = []
        for g, gen in enumerate(instance.generators):
            prev = gen.v0
            for t in range(T):
                cur = u[g, t]
                pairs += [(vmap.col("x", g, t), prev * cur), (vmap.col("s", g, t), cur * (1 - prev)),
                          (vmap.col("z", g, t), prev * (1 - cur))]
                prev = cur
        sub = fix_variables(problem, Assignment(tuple(pairs)))
        status, obj, x = reference_lp(sub)
        if status == "Optimal" and obj < best:
            best, best_x = obj, x
    return best, best_x


def random_milp(rng, max_binaries=12):
    nb = int(rng.integers(2, max_binaries + 1))
    nc = int(rng.integers(0, 4))
    n, m = nb + nc, int(rng.integers(1, 8))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    A[A == 0] = 1.0
    b = rng.uniform(-2, 10, size=m)
    c = rng.integers(-10, 10, size=n).astype(float)
    u = np.concatenate([np.ones(nb), np.full(nc, 5.0)])
    ints = np.concatenate([np.ones(nb, bool), np.zeros(nc, bool)])
    return make_problem(c, A, b, np.zeros(n), u, ints)


def random_lp(rng):
    m, n = int(rng.integers(1, 15)), int(rng.integers(1, 15))
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.7)
    A[np.abs(A).sum(axis=1) == 0, 0] = 1.0
    b = rng.normal(size=m) * 3
    c = rng.normal(size=n)
    l = np.where(rng.random(n) < 0.2, -np.inf, rng.normal(size=n) - 1)
    u = np.where(rng.random(n) < 0.3, np.inf, l + rng.random(n) * 4)
    u = np.where(np.isinf(l) & np.isinf(u), 5.0, u)
    return make_problem(c, A, b, l, u)


@pytest.fixture(scope="session")
def tiny():
    return tiny_instance()


@pytest.fixture(scope="session")
def desk_instance():
    from neuralmip.power import desk_system
    from neuralmip.power.scenarios import base_shape, generate_load_scenarios

    system = desk_system(0)
    sc = generate_load_scenarios(base_shape(12), 1, 320.0, 0.03, 0.05, 1,
                                 np.array(system.bus_weights))[0]
    return make_instance(system, sc, name="desk")
