"""
Subtree-pruning minimizer for syntax trees.
"""

from typing import Callable, Optional

from syntax.nodes import AstTree, NodeKind, iter_with_paths, node_at


def _removable(tree: AstTree, path) -> bool:
    if not path:
        return False
    parent = node_at(tree.root, path[:-1])
    return len(parent.children) >= 2 or (
        parent is tree.root and parent.kind == NodeKind.TRANSLATION_UNIT)


def minimize_ast(tree: AstTree, keep: Callable[[AstTree], bool],
                 max_checks: Optional[int] = None) -> AstTree:
    """Remove subtrees while `keep` stays true.

    Candidates are visited in pre-order so large subtrees go first; passes
    repeat until none succeeds, which makes the result 1-minimal with respect
    to single-subtree removal (unless `max_checks` runs out first).

    Args:
        tree: Tree with keep(tree) true; not modified
        keep: Predicate the result must satisfy
        max_checks: Optional cap on keep() evaluations

    Returns:
        The reduced tree (a new object; equal to the input if nothing could go)
    """
    current = tree.clone()
    current.diagnostics = list(tree.diagnostics)
    checks = 0

    while True:
        progress = False
        index = 0
        paths = [p for p, _ in iter_with_paths(current.root)]
        while index < len(paths):
            path = paths[index]
            if not _removable(current, path):
                index += 1
                continue
            if max_checks is not None and checks >= max_checks:
                return current
            candidate = current.clone()
            candidate.diagnostics = []
            parent = node_at(candidate.root, path[:-1])
            parent.children.pop(path[-1])
            checks += 1
            if keep(candidate):
                current = candidate
                progress = True
                paths = [p for p, _ in iter_with_paths(current.root)]
                # the node now at `index` is the removed node's successor
            else:
                index += 1
        if not progress:
            return current
