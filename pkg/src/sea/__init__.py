"""Spectral edge-vulnerability analysis and reweighting attacks on GNNs.

Submodules are imported lazily so that thread-pool environment variables set
by the CLI take effect before the numeric stack loads.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    # sparse-linalg
    "SparseMatrix": ".sparse",
    "spmv": ".sparse",
    "WeightedGraph": ".graph",
    "build_laplacian": ".graph",
    "normalize_laplacian": ".graph",
    "connected_components": ".graph",
    "DeflationBasis": ".solver",
    "cg_solve": ".solver",
    "dense_generalized_eig": ".solver",
    # knn-graph
    "build_knn": ".knn",
    # spectral-scoring
    "SpectralEmbedding": ".spectral",
    "EdgeScore": ".spectral",
    "generalized_eigenpairs": ".spectral",
    "spade_score": ".spectral",
    "spade_scores": ".spectral",
    "rank_and_select": ".spectral",
    # gnn-engine
    "GnnModel": ".models",
    "create_model": ".models",
    "normalize_adjacency": ".models",
    "gcn_forward": ".models",
    "gat_forward": ".models",
    "sage_forward": ".models",
    "extract_embeddings": ".models",
    "evaluate": ".models",
    "save_checkpoint": ".models",
    "load_checkpoint": ".models",
    "TrainConfig": ".training",
    "train": ".training",
    # dataset
    "Dataset": ".data",
    "load_cora": ".data",
    "make_split": ".data",
    "synthetic_blobs": ".data",
    "save_dataset": ".data",
    "load_dataset": ".data",
    # attack-harness
    "AttackPlan": ".attack",
    "AttackReport": ".attack",
    "apply_attack": ".attack",
    "run_sea": ".attack",
    "run_random_baseline": ".attack",
    "compare": ".attack",
    # cli
    "RunConfig": ".config",
    "load_config": ".config",
}

__all__ = sorted(_EXPORTS) + ["errors", "__version__"]


def __getattr__(name: str):
    if name == "errors":
        return import_module(".errors", __name__)
    try:
        module = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(module, __name__), name)


def __dir__():
    return __all__
