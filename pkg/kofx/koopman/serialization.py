"""Reading and writing Koopman model artifacts."""

import logging
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import ValidationError

from kofx import __version__
from kofx.core.exceptions import ContractViolation, InputFileError
from kofx.koopman.frame import AffineFrame
from kofx.koopman.model import INVERSE_COND_LIMIT, RESIDUAL_TOLERANCE, KoopmanModel
from kofx.models.artifact import BasisDescriptor, ComplexArray, FrameDescriptor, KoopmanArtifact
from kofx.poly.basis import BasisSet, Domain

logger = logging.getLogger(__name__)


def model_to_artifact(model: KoopmanModel) -> KoopmanArtifact:
    domain = model.basis.domain
    return KoopmanArtifact(
        tool_version=__version__,
        basis=BasisDescriptor(
            lower=list(domain.lower), upper=list(domain.upper), max_degree=model.basis.max_degree
        ),
        frame=FrameDescriptor(
            matrix=ComplexArray.from_array(model.frame.matrix),
            offset=ComplexArray.from_array(model.frame.offset),
        ),
        koopman_matrix=ComplexArray.from_array(model.koopman_matrix),
        eigenvectors=ComplexArray.from_array(model.eigenvectors),
        eigenvalues=ComplexArray.from_array(model.eigenvalues),
        condition_number=model.condition_number,
        metadata=dict(model.metadata),
    )


def artifact_to_model(
    artifact: KoopmanArtifact, inverse_limit: float = INVERSE_COND_LIMIT
) -> KoopmanModel:
    """Rebuild the model; rejects artifacts whose decomposition does not hold."""
    basis = BasisSet(Domain(tuple(artifact.basis.lower), tuple(artifact.basis.upper)), artifact.basis.max_degree)
    K = artifact.koopman_matrix.to_array()
    C = artifact.eigenvectors.to_array()
    eigenvalues = artifact.eigenvalues.to_array()
    m = basis.size
    if K.shape != (m, m) or C.shape != (m, m) or eigenvalues.shape != (m,):
        raise ContractViolation(
            f"Artifact arrays do not match a basis of size {m}",
            details={"K": list(K.shape), "C": list(C.shape), "eigenvalues": list(eigenvalues.shape)},
        )
    inverse = np.linalg.inv(C) if artifact.condition_number <= inverse_limit else None
    model = KoopmanModel(
        basis=basis,
        koopman_matrix=K,
        eigenvectors=C,
        eigenvalues=eigenvalues,
        inverse=inverse,
        frame=AffineFrame(artifact.frame.matrix.to_array(), artifact.frame.offset.to_array()),
        condition_number=artifact.condition_number,
        metadata=dict(artifact.metadata),
    )
    residual = model.residual()
    if residual > RESIDUAL_TOLERANCE:
        raise ContractViolation(
            f"Artifact eigendecomposition residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:.0e}"
        )
    return model


def save_model(model: KoopmanModel, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(model_to_artifact(model).model_dump_json(indent=2) + "\n")
    logger.info(f"Wrote Koopman model artifact to {target}")
    return target


def load_model(path: Union[str, Path], inverse_limit: float = INVERSE_COND_LIMIT) -> KoopmanModel:
    source = Path(path)
    try:
        text = source.read_text()
    except OSError as e:
        raise InputFileError(str(source), e.strerror or str(e)) from e
    try:
        artifact = KoopmanArtifact.model_validate_json(text)
    except ValidationError as e:
        raise InputFileError(str(source), f"invalid model artifact ({e.error_count()} errors)") from e
    logger.debug(f"Loaded artifact {source} written by version {artifact.tool_version}")
    return artifact_to_model(artifact, inverse_limit)
