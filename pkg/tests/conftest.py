"""Shared fixtures: corpora are expensive, so they are session scoped."""

from __future__ import annotations

import time

import pytest

from newsflow.config import EngineConfig
from newsflow.ingest import SeriesStore
from newsflow.simgen import CorpusSpec, corpus_event_stream


@pytest.fixture(scope="session")
def default_spec() -> CorpusSpec:
    return CorpusSpec()


@pytest.fixture(scope="session")
def default_store(default_spec):
    """The default 606-article corpus, fully ingested.

    Builds once for the whole run (roughly forty seconds); the elapsed
    build time is stashed on the store so timing-sensitive tests can
    account for it.
    """
    config = EngineConfig()
    store = SeriesStore(config)
    started = time.perf_counter()
    for event in corpus_event_stream(default_spec):
        store.ingest(event)
    store.build_seconds = time.perf_counter() - started
    return store


@pytest.fixture(scope="session")
def default_analysis(default_store):
    """Id-ordered list of default-corpus articles passing the sample filter."""
    from newsflow.reports import analysis_series

    return analysis_series(default_store)
