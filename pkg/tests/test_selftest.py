from patchblend.selftest import corrupted_query_cells, run_properties


def test_all_properties_pass():
    results = run_properties(echo=lambda s: None)
    assert results and all(ok for _, ok, _ in results)
    counts = dict((n, d) for n, _, d in results)
    assert counts["remapping table count N=8"].startswith("12 ")


def test_corrupted_walk_fails_coverage():
    lines = []
    results = {n: ok for n, ok, _ in run_properties(corrupted_query_cells, echo=lines.append)}
    assert not results["query coverage"]
    assert not results["stub fast equals window mean"]
    assert any(l.startswith("FAIL  query coverage") for l in lines)
