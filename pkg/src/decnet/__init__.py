"""Decoding nets: a model of how hardware routes memory accesses and interrupts.

The package parses ``.dn`` model files, resolves names, builds termination
witnesses, and checks view-preserving transformations such as node
splitting and flattening.
"""

from .core import (
    Block,
    Dest,
    MapEntry,
    Name,
    NetModel,
    NodeDesc,
    Ranking,
    accepted_contains,
    compute_ranking,
    decode_step,
    is_in_domain,
    reachable_names,
    resolve,
    view_from,
    wf_rank,
)
from .dsl import elaborate, fresh_id, load, parse, pretty_print, split_spec
from .errors import (
    DanglingReference,
    DecnetError,
    DslError,
    DslSyntaxError,
    InvalidBlock,
    LoopDetected,
    NotFresh,
    NotInDomain,
    UndeclaredIdentifier,
    UnknownNode,
)
from .transforms import (
    EquivReport,
    FlatView,
    Remap,
    derive_witness_addresses,
    flatten,
    flatten_segments,
    mixed_nodes,
    split_all,
    split_net,
    split_node,
    view_equiv,
)

__version__ = "0.1.0"
