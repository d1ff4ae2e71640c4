"""Tree to text."""

from syntax.nodes import AstNode, AstTree, iter_nodes
from syntax.parser import parse

# a newline follows these tokens, a single space follows everything else
_LINE_BREAK_AFTER = frozenset({';', '{', '}'})


def unparse(tree) -> str:
    """Deterministic text for a tree or node.

    Leaves are joined with exactly one separator between neighbours and no
    trailing whitespace, so every leaf re-lexes to itself.
    """
    root = tree.root if isinstance(tree, AstTree) else tree
    parts = []
    previous = None
    for node in iter_nodes(root):
        if not node.is_leaf:
            continue
        if previous is not None:
            parts.append('\n' if previous in _LINE_BREAK_AFTER else ' ')
        parts.append(node.text)
        previous = node.text
    return ''.join(parts)


def normalize(tree: AstTree) -> AstTree:
    """The tree a round trip through text produces."""
    text = unparse(tree)
    if not text:
        return AstTree(AstNode(tree.root.kind, '', []))
    return parse(text)
