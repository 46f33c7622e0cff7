# Utils package for the investor-flow / news-sentiment analysis
