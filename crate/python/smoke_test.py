"""Smoke test for the energy_pomdp extension module.

Build and install it first:  pip install --no-build-isolation -e crates/python
"""

import energy_pomdp as ep


def main():
    tiger = ep.Model.tiger(capacity=3)
    assert ep.Solver(tiger).feasible

    corridor = ep.Model.corridor(length=5, capacity=3)
    assert not ep.Solver(corridor).feasible
    assert ep.Solver(ep.Model.corridor(length=5, capacity=3, reload_at=2)).feasible

    # Text round trip.
    again = ep.Model.parse(tiger.to_text())
    assert again.states == tiger.states and again.capacity == 3

    hallway = ep.Model.hallway("6x6", capacity=10)
    solver = ep.Solver(hallway)
    table = solver.solve(trials=500, seed=1)
    assert len(table) > 0
    assert len(ep.ValueTable.from_text(table.to_text())) == len(table)

    tree = solver.learn(table, criterion="gini", sims=200, seed=1)
    parsed = ep.Tree.parse(str(tree), hallway)
    assert parsed.size == tree.size
    assert "digraph" in tree.to_dot(hallway)

    rows = [
        solver.evaluate("all", sims=1000, seed=2),
        solver.evaluate("rtdp", table=table, sims=1000, seed=2),
        solver.evaluate("dt", tree=tree, sims=1000, seed=2),
    ]
    for r in rows:
        assert r["violations"] == 0, r
        print(f"{r['policy']:>10} size={r['size']} value={r['value']:.3f} +- {r['ci95']:.3f} reach={r['reach']:.4f}")
    assert rows[2]["value"] * 5 <= rows[0]["value"]

    try:
        ep.Model.parse("states: 2\nbogus")
    except ValueError as e:
        print("parse error:", e)
    else:
        raise AssertionError("bad model accepted")
    print("ok")


if __name__ == "__main__":
    main()
