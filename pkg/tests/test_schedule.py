import numpy as np

from patchblend.nnf import LossSpec, MatchConfig
from patchblend.schedule import MatchJob, NNFScheduler, identity_field, job_seed
from patchblend.synthetic import texture

CFG = MatchConfig(iterations=2)


def jobs(n):
    return [MatchJob((k, k + 1), texture(20, 20, k), texture(20, 20, k + 1), LossSpec(), CFG) for k in range(n)]


def test_results_independent_of_workers():
    a = NNFScheduler().run(jobs(4))
    b = NNFScheduler(workers=4).run(jobs(4))
    assert a.keys() == b.keys()
    assert all(np.array_equal(a[k], b[k]) for k in a)


def test_counts_dedupes_and_caches():
    s = NNFScheduler(identity_field, cache=True)
    s.run(jobs(3) + jobs(3))
    assert s.count == 3
    s.run(jobs(3))
    assert s.count == 3
    s.clear()
    s.run(jobs(1))
    assert s.count == 4 and s.log[-1] == (0, 1)


def test_job_seed_depends_on_key():
    assert job_seed(1, (2, 3)) == job_seed(1, (2, 3))
    assert job_seed(1, (2, 3)) != job_seed(1, (3, 2))
    assert job_seed(1, (2, 3)) != job_seed(2, (2, 3))
