from pathlib import Path

import pytest

from statediff import depgraph, runner
from statediff.model import load_model
from statediff.runner import load_suite
from statediff.statechart import load_chart

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


@pytest.fixture(scope="session")
def elevator():
    return load_model(CORPUS / "elevator_model.json")


@pytest.fixture(scope="session")
def elevator_chart():
    return load_chart(CORPUS / "elevator_chart.json")


@pytest.fixture(scope="session")
def elevator_suite():
    return load_suite(CORPUS / "elevator_suite.json")


@pytest.fixture(scope="session")
def elevator_traces(elevator, elevator_suite):
    return runner.run_suite(elevator, elevator_suite)


@pytest.fixture(scope="session")
def control_cidg(elevator):
    return depgraph.assemble_cidg(elevator, "Control")


@pytest.fixture(scope="session")
def control_traces(elevator_traces, control_cidg):
    keep = control_cidg.all_nodes
    return [runner.restrict_trace(t, keep) for t in elevator_traces]
