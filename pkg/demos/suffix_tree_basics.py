"""
Counting repeats with a suffix tree
===================================

Every repeated substring of a token string ends on an edge of its suffix
tree, and the number of leaves below that edge is how often it occurs.
Here we look at the classic "banana" example.
"""

from itermine import SuffixTree, enumerate_repeats

text = "banana"
alphabet = sorted(set(text))
tokens = [alphabet.index(c) for c in text]

tree = SuffixTree(tokens)
print(f"{tree.n_leaves} leaves, {tree.n_internal} internal nodes (root included)")


def spell(ts):
    return "".join(alphabet[t] if t < len(alphabet) else "$" for t in ts)


# walk the internal nodes; leaf_count is the occurrence count of the path label
for v in tree.internal_nodes():
    print(f"  node {v:2d}  {spell(tree.path_label(v)) or '(root)':8s} occurs {tree.leaf_count[v]} times")

###############################################################################
# Repeats with a length cap
# -------------------------
#
# With a cap of 2 the "ana" node still contributes: its label is cut
# mid-edge to "an", which occurs exactly as often as "ana".

for r in enumerate_repeats(tree, min_count=2, max_len=2):
    print(f"  {spell(tokens[r.first : r.first + r.length]):4s} count={r.count}")
