"""Tree surgery used by the structure proposals.

Paths are tuples of 0 (left) and 1 (right) from the root. Surgery never
modifies its inputs and returns, along with the new expression, a table
mapping each parameter of the new expression to the index of the same
parameter in the original expression (None for parameters of new leaves).
"""

from dataclasses import dataclass, replace

import numpy as np

from gpc_discovery.exceptions import InvalidTreePathError, KernelDepthError
from gpc_discovery.kernels.expressions import (
    Composite,
    KernelExpression,
    Leaf,
    Operator,
)

TreePath = tuple[int, ...]


@dataclass(frozen=True)
class SurgeryResult:
    """Output of a tree surgery.

    Parameters
    ----------
    expression : KernelExpression
        New expression.
    index_map : list[int | None]
        For each parameter of the new expression, the index of the same
        parameter in the original expression, None for fresh parameters.
    """

    expression: KernelExpression
    index_map: list[int | None]

    @property
    def n_fresh(self) -> int:
        """Number of parameters which need fresh values."""
        return sum(index is None for index in self.index_map)


def list_subtrees(k: KernelExpression) -> list[TreePath]:
    """Paths of every node, in pre-order.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.

    Returns
    -------
    list[TreePath]
        Paths, the root path () first.
    """
    if isinstance(k, Leaf):
        return [()]
    left = [(0, *path) for path in list_subtrees(k.left)]
    right = [(1, *path) for path in list_subtrees(k.right)]
    return [(), *left, *right]


def get_subtree(k: KernelExpression, path: TreePath) -> KernelExpression:
    """Subtree at a given path.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    path : TreePath
        Path to the subtree.

    Returns
    -------
    KernelExpression
        Subtree.

    Raises
    ------
    InvalidTreePathError
        If the path does not exist in k.
    """
    node = k
    for step in path:
        if not isinstance(node, Composite) or step not in (0, 1):
            raise InvalidTreePathError(tuple(path), k.to_text())
        node = node.left if step == 0 else node.right
    return node


def subtree_param_slice(k: KernelExpression, path: TreePath) -> slice:
    """Indices of the parameters of a subtree in k's parameter vector.

    The parameters of a subtree are contiguous in the canonical order.

    Parameters
    ----------
    k : KernelExpression
        Kernel expression.
    path : TreePath
        Path to the subtree.

    Returns
    -------
    slice
        Slice of the subtree's parameters.
    """
    node = k
    offset = 0
    for step in path:
        get_subtree(node, (step,))
        if step == 1:
            offset += node.left.param_dim
        node = node.left if step == 0 else node.right
    return slice(offset, offset + node.param_dim)


def _set_subtree(
    k: KernelExpression,
    path: TreePath,
    replacement: KernelExpression,
) -> KernelExpression:
    if not path:
        return replacement
    if not isinstance(k, Composite):
        raise InvalidTreePathError(tuple(path), k.to_text())
    if path[0] == 0:
        return replace(k, left=_set_subtree(k.left, path[1:], replacement))
    return replace(k, right=_set_subtree(k.right, path[1:], replacement))


def _tag_leaves(k: KernelExpression) -> KernelExpression:
    counter = iter(range(k.size))

    def tag(node: KernelExpression) -> KernelExpression:
        if isinstance(node, Leaf):
            return Leaf(node.kind, tag=next(counter))
        return Composite(node.op, tag(node.left), tag(node.right))

    return tag(k)


def _untag(node: KernelExpression) -> KernelExpression:
    if isinstance(node, Leaf):
        return Leaf(node.kind)
    return Composite(node.op, _untag(node.left), _untag(node.right))


def _index_map(
    original: KernelExpression,
    tagged_result: KernelExpression,
) -> list[int | None]:
    offsets = []
    offset = 0
    for leaf in original.leaves():
        offsets.append(offset)
        offset += leaf.base.arity
    index_map: list[int | None] = []
    for leaf in tagged_result.leaves():
        arity = leaf.base.arity
        if leaf.tag is None:
            index_map += [None] * arity
        else:
            index_map += list(range(offsets[leaf.tag], offsets[leaf.tag] + arity))
    return index_map


def _check_depth(k: KernelExpression, max_depth: int | None) -> None:
    if max_depth is not None and k.depth > max_depth:
        raise KernelDepthError(k.depth, max_depth)


def replace_subtree(
    k: KernelExpression,
    path: TreePath,
    replacement: KernelExpression,
    max_depth: int | None = None,
) -> SurgeryResult:
    """Replace the subtree at path.

    Parameters
    ----------
    k : KernelExpression
        Original expression.
    path : TreePath
        Path of the subtree to replace.
    replacement : KernelExpression
        New subtree, its parameters are all fresh.
    max_depth : int | None, optional
        Maximum depth of the result, unchecked if None., by default None

    Returns
    -------
    SurgeryResult
        New expression and parameter index map.

    Raises
    ------
    InvalidTreePathError
        If the path does not exist in k.
    KernelDepthError
        If the result is deeper than max_depth.
    """
    get_subtree(k, path)
    tagged = _tag_leaves(k)
    result = _set_subtree(tagged, path, _untag(replacement))
    _check_depth(result, max_depth)
    return SurgeryResult(_untag(result), _index_map(k, result))


def detach_reattach(
    k: KernelExpression,
    detach_path: TreePath,
    attach_path: TreePath,
    op: Operator | None = None,
    side: int | None = None,
    max_depth: int | None = None,
) -> SurgeryResult:
    """Move a subtree to another location of the tree.

    The subtree S at detach_path is removed and its parent is replaced by S's
    sibling, giving a reduced tree. The node T at attach_path of the reduced
    tree is then replaced by (S op T) if side is 0, or (T op S) if side is 1.

    Parameters
    ----------
    k : KernelExpression
        Original expression.
    detach_path : TreePath
        Path of the moved subtree, can't be the root.
    attach_path : TreePath
        Path of the attachment node, in the reduced tree.
    op : Operator | None, optional
        Operator of the new parent, the old parent's if None., by default None
    side : int | None, optional
        Side of S under its new parent, its old side if None., by default None
    max_depth : int | None, optional
        Maximum depth of the result, unchecked if None., by default None

    Returns
    -------
    SurgeryResult
        New expression and parameter index map.

    Raises
    ------
    InvalidTreePathError
        If a path does not exist or detach_path is the root.
    KernelDepthError
        If the result is deeper than max_depth.
    """
    if not detach_path:
        raise InvalidTreePathError((), k.to_text())
    get_subtree(k, detach_path)
    tagged = _tag_leaves(k)
    parent_path = detach_path[:-1]
    parent = get_subtree(tagged, parent_path)
    moved = get_subtree(tagged, detach_path)
    sibling = parent.right if detach_path[-1] == 0 else parent.left
    reduced = _set_subtree(tagged, parent_path, sibling)
    target = get_subtree(reduced, attach_path)
    new_op = parent.op if op is None else op
    new_side = detach_path[-1] if side is None else side
    if new_side == 0:
        new_parent = Composite(new_op, moved, target)
    else:
        new_parent = Composite(new_op, target, moved)
    result = _set_subtree(reduced, attach_path, new_parent)
    _check_depth(result, max_depth)
    return SurgeryResult(_untag(result), _index_map(k, result))


def reduced_tree(k: KernelExpression, detach_path: TreePath) -> KernelExpression:
    """Tree left once the subtree at detach_path is removed.

    Parameters
    ----------
    k : KernelExpression
        Original expression.
    detach_path : TreePath
        Path of the removed subtree, can't be the root.

    Returns
    -------
    KernelExpression
        k with the removed subtree's parent replaced by its sibling.
    """
    if not detach_path:
        raise InvalidTreePathError((), k.to_text())
    parent_path = detach_path[:-1]
    parent = get_subtree(k, parent_path)
    get_subtree(k, detach_path)
    sibling = parent.right if detach_path[-1] == 0 else parent.left
    return _set_subtree(k, parent_path, sibling)


def remap_params(
    old_params: np.ndarray,
    index_map: list[int | None],
    fresh: np.ndarray,
) -> np.ndarray:
    """Build the parameter vector of a surgery result.

    Parameters
    ----------
    old_params : np.ndarray
        Parameters of the original expression.
    index_map : list[int | None]
        Index map returned by the surgery.
    fresh : np.ndarray
        Values for the fresh parameters, in order.

    Returns
    -------
    np.ndarray
        Parameters of the new expression.
    """
    fresh_values = iter(np.asarray(fresh, dtype=float))
    return np.array(
        [
            old_params[index] if index is not None else next(fresh_values)
            for index in index_map
        ],
        dtype=float,
    )
