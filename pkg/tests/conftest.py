from __future__ import annotations

import pytest

import helpers


@pytest.fixture
def op_clock():
    return helpers.OP_CLOCK


@pytest.fixture
def anchors():
    return helpers.all_anchors()


@pytest.fixture
def extractor_identity():
    return helpers.fixture_identity("extractor")


@pytest.fixture
def chain3():
    return helpers.chain3_doc()


@pytest.fixture
def chain4():
    return helpers.chain4_doc()


@pytest.fixture
def service_app(tmp_path):
    """App factory over a fresh store; hosted extractor key configured."""
    from idstack.service import ServiceConfig, create_app

    def factory(*, store_root=None, clock=helpers.OP_CLOCK, hosted=True, weights_file=None):
        config = ServiceConfig(
            store_root=store_root or tmp_path / "store",
            template_dir=helpers.FIXTURES / "templates",
            trust_anchor_file=helpers.FIXTURES / "trust-anchors.json",
            weights_file=weights_file,
            server_key_file=helpers.FIXTURES / "identities" / "extractor.key" if hosted else None,
            server_cert_file=(
                helpers.FIXTURES / "identities" / "extractor.cert.json" if hosted else None
            ),
        )
        return create_app(config, clock=clock)

    return factory
