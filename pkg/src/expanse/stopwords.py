"""Default stopword lists used by the data filters and the overlap scorer.

These ship as conservative built-ins; corpus builders with stricter needs can
point FilterConfig at their own lists.
"""

from __future__ import annotations

from .corpus import Language

EN_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are as at be because
    been before being below between both but by could did do does doing down
    during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more
    most my myself no nor not now of off on once only or other our ours
    ourselves out over own s same she should so some such t than that the
    their theirs them themselves then there these they this those through to
    too under until up very was we were what when where which while who whom
    why will with you your yours yourself yourselves 's 'm 're 've 'll 'd n't
    """.split()
)

ZH_STOPWORDS = frozenset(
    """
    的 了 在 是 我 有 和 就 不 人 都 一 一个 上 也 很 到 说 要 去 你 会 着
    没有 看 好 自己 这 那 他 她 它 们 与 及 或 而 被 把 让 向 从 对 给 为
    于 之 其 此 但 并 等 地 得 所 因为 所以 如果 虽然 这个 那个 什么 怎么
    我们 你们 他们 这些 那些 已经 还是 就是 只是 而且 或者 以及 即 呢 吗
    啊 吧 嘛 么 哦 呀
    """.split()
)


def default_stopwords(language: Language) -> frozenset[str]:
    return ZH_STOPWORDS if Language(language) is Language.ZH else EN_STOPWORDS
