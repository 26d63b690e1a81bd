"""
Web Agent

Queries every configured search engine in order, merges the pages keeping
the first occurrence of each URL, drops pages the zero-shot classifier
does not place on the query topic and hands the page bodies to the web
synopsis.
"""

from typing import List

from agents.base_agent import SourceAgent
from core.media_services import WebPage
from summarization.synopsis import topic_filter


class WebAgent(SourceAgent):
    kind = "web"

    def search_all(self, query: str) -> List[WebPage]:
        pages: List[WebPage] = []
        seen = set()
        for engine in self.config["clients"]["web_engines"]:
            results = self.clients.web_search.search(query, engine)
            self.logger.debug(f"engine={engine} pages={len(results)}")
            for page in results:
                if page.url not in seen:
                    seen.add(page.url)
                    pages.append(page)
        return pages

    def gather(self, query: str) -> List[str]:
        conv = self.config["convergence"]
        pages = self.search_all(query)
        kept = topic_filter(pages, query, self.clients.classifier,
                            conv["topic_threshold"], conv["off_topic_labels"])
        self.logger.info(f"web pages={len(pages)} on_topic={len(kept)} query={query!r}")
        self.artifacts["pages"] = [{"title": p.title, "url": p.url} for p in kept]
        return [page.body or page.snippet for page in kept]
