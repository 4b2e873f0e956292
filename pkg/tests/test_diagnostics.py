import numpy as np

from tstmr.diagnostics import check_remark24
from tstmr.linalg import split_hs
from tstmr.problems import convdiff2d


def test_zero_matrices_pass():
    assert check_remark24(np.zeros((3, 3)), np.zeros((3, 3)))


def test_identities_fail():
    assert not check_remark24(np.eye(3), np.eye(3))


def test_one_side_below_one_suffices():
    assert check_remark24(0.5 * np.eye(4), 2.0 * np.eye(4))
    assert check_remark24(2.0 * np.eye(4), 0.5 * np.eye(4))


def test_midpoint_shifted_skew_split_passes_on_convdiff():
    # N^ M^-1 for the splitting (H, eta* I + S): N^ = eta* I - H
    A = convdiff2d(8, "I").matrix
    H, S = split_hs(A)
    Hd, Sd = H.to_dense(), S.to_dense()
    eigs = np.linalg.eigvalsh(Hd)
    eta = 0.5 * (eigs[0] + eigs[-1])
    n = A.nrows
    Mh = eta * np.eye(n) + Sd
    Nh = Mh - A.to_dense()
    Mt = Hd
    Nt = Mt - A.to_dense()
    assert check_remark24(Nt @ np.linalg.inv(Mt), Nh @ np.linalg.inv(Mh))
