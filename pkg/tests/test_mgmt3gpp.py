import pytest

from zsmsim.errors import AccessDenied, NotExposed, NotPossible, UnknownSlice, UnknownSubnet
from zsmsim.mgmt3gpp import NSMF_CAPABILITY, EgmfPolicy, NfvoBinding, NsmfService, NssmfService, binding_for
from zsmsim.nfv import ResourceProfile, ScaleRequest

REQ = ScaleRequest("r1", "vnf-smf-a", ResourceProfile(1), correlation_id="c1")


def test_binding_per_option():
    assert binding_for("1A") is NfvoBinding.INTEGRATED_INVOKE
    assert binding_for("1B") is binding_for("2") is NfvoBinding.OS_MA_NFVO


def test_nssmf_dispatch_and_errors():
    calls = []
    nssmf = NssmfService("n", NfvoBinding.OS_MA_NFVO, {"a-subnet": "a"},
                         to_nfvo=lambda subnet, req, env: calls.append((subnet, req)) or "ticket")
    assert nssmf.provision_subnet("a-subnet", REQ) == "ticket"
    assert calls == [("a-subnet", REQ)]
    with pytest.raises(UnknownSubnet):
        nssmf.provision_subnet("zz", REQ)
    nssmf.frozen.add("a-subnet")
    with pytest.raises(NotPossible):
        nssmf.provision_subnet("a-subnet", REQ)
    assert nssmf.fault_management("ev-1") == "ack" and nssmf.fault_acks == ["ev-1"]


def test_nsmf_delegates_to_subnet():
    seen = []
    nsmf = NsmfService("m", {"a": "a-subnet"}, to_nssmf=lambda subnet, req, env: seen.append(subnet) or 1)
    assert nsmf.provision_slice("a", REQ) == 1 and seen == ["a-subnet"]
    with pytest.raises(UnknownSlice):
        nsmf.provision_slice("b", REQ)


def test_nsmf_subscription_idempotent():
    nsmf = NsmfService("m")
    ids = iter(["sub-1", "sub-2"])
    first = nsmf.subscribe_analytics("t", lambda topic: next(ids))
    assert nsmf.subscribe_analytics("t", lambda topic: next(ids)) == first == "sub-1"


def test_egmf_gates_exposure():
    egmf = EgmfPolicy([(NSMF_CAPABILITY, "e2e-cn/zsm.adapter.3gpp")])
    egmf.admit(NSMF_CAPABILITY, "e2e-cn/zsm.adapter.3gpp")
    with pytest.raises(NotExposed):
        egmf.admit(NSMF_CAPABILITY, "sd-a/zsm.domain.control.resource_lifecycle")
    policy = egmf.as_exposure_policy("ext-3gpp")
    assert policy.allows(NSMF_CAPABILITY, "e2e-cn/zsm.adapter.3gpp", "e2e-cn")
    assert not policy.allows(NSMF_CAPABILITY, "sd-a/x", "sd-a")
    assert issubclass(policy.denial, AccessDenied)
